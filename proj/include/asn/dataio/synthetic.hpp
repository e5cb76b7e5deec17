// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asn/config.hpp"
#include "asn/dataio/dataset.hpp"
#include "asn/random.hpp"

namespace asn::dataio {

// Scripted block tasks rendered from two fixed cameras:
//   stack           pick one block and place it on the other (2 blocks)
//   color_push      push the red block against the blue one (3 blocks)
//   color_stack     place the red block on the blue one, green distracts (3 blocks)
//   separate_stack  unstack a 2-stack, then rebuild it in reverse order (3 blocks)
// color_stack needs the color-selective approach of color_push and the
// pick-and-place of stack, so it serves as the held-out composition task.
const std::vector<std::string>& known_tasks();

// Generates one demonstration. Unsuccessful executions end in a non-goal
// configuration. Throws ConfigError for unknown task names.
Demonstration generate_demonstration(const std::string& task, bool success, int frames, int image_size,
                                     Rng& rng);

// Deterministic in `seed`. Exactly round(fraction_unsuccessful * demos_per_task)
// demonstrations per task are unsuccessful.
MultiTaskDataset generate_synthetic_dataset(const GeneratorConfig& config, std::uint64_t seed,
                                            Split split = Split::train);

// Training and validation splits use the generator tasks, the test split the
// held-out tasks; demo counts come from the per-split settings.
MultiTaskDataset generate_split(const DataConfig& config, std::uint64_t seed, Split split);

// True when the final state satisfies the task's goal predicate.
bool goal_reached(const std::string& task, const WorldState& final_state);

}  // namespace asn::dataio
