#pragma once

#include <cstdint>
#include <memory>

#include "laq/dataset.hpp"
#include "laq/forward_model.hpp"

namespace laq {

using DatasetPtr = std::shared_ptr<const TransitionDataset>;

/// label = gt_action, num_labels = num_actions. Throws std::invalid_argument
/// if a record has no gt_action.
LabeledDataset label_ground_truth(DatasetPtr ds, int num_actions = 8);

/// Every record gets label 0.
LabeledDataset label_single(DatasetPtr ds);

/// label = gt_action * k + U with U uniform in [0, k), drawn per record from
/// a counter-based stream so the result does not depend on record order.
LabeledDataset label_refined(DatasetPtr ds, int k, std::uint64_t seed, int num_actions = 8);

/// With probability p the label is redrawn uniformly over all num_actions
/// actions (the true one included), otherwise it is gt_action.
LabeledDataset label_obfuscated(DatasetPtr ds, double p, std::uint64_t seed, int num_actions = 8);

/// label = argmin over latents of the model's loss, ties toward the lowest
/// index.
LabeledDataset label_with_model(DatasetPtr ds, const ForwardModel& model);

/// Keeps the top_k most frequent labels (frequency ties toward the lower
/// label), relabels records whose label was dropped by argmin model loss over
/// the kept set, and re-indexes kept labels densely in ascending order of
/// their original index.
LabeledDataset dominant_filter(const LabeledDataset& lds, int top_k, const ForwardModel& model);

}  // namespace laq
