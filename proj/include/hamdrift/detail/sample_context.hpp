// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include <fmt/format.h>

#include "hamdrift/integrators.hpp"

namespace hamdrift::detail {

/// Runs fn(), tagging any library error it throws with the Monte Carlo sample index.
template <class Fn>
auto with_sample_context(std::int64_t index, Fn&& fn) {
    try {
        return fn();
    } catch (const SolverDiverged& e) {
        throw e.at_sample(index);
    } catch (const Error& e) {
        throw Error(fmt::format("{} [sample {}]", e.what(), index));
    }
}

}  // namespace hamdrift::detail
