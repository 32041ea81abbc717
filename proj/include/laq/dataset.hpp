#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace laq {

using Observation = std::vector<double>;

/// One logged step. `gt_action` is the executed action; it is kept for
/// evaluation only and never read by the learning path.
struct Transition {
  Observation obs;
  Observation next_obs;
  double reward = 0.0;
  std::optional<int> gt_action;
  int episode = 0;
  int t = 0;
};

struct TransitionDataset {
  std::vector<Transition> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  /// Observation dimension (0 for an empty dataset).
  int dim() const;
};

/// Label assignment over a shared, immutable source dataset.
struct LabeledDataset {
  std::shared_ptr<const TransitionDataset> source;
  std::vector<int> labels;
  int num_labels = 0;

  std::string scheme;  // gt | single | refined | obfuscated | latent | cluster-* | dominant
  int k = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string model_id;

  std::size_t size() const noexcept { return labels.size(); }
  const Transition& record(std::size_t i) const { return source->records[i]; }
  /// Throws std::invalid_argument if labels are out of range or the count
  /// does not match the source.
  void validate() const;
};

/// Dense integer ids for the distinct observations of a dataset. States that
/// only ever appear as `next_obs` get ids too and are flagged as having no
/// outgoing data.
struct StateIndex {
  std::vector<Observation> keys;
  std::vector<int> obs_state;       // per record
  std::vector<int> next_state;      // per record
  std::vector<char> has_outgoing;   // per state

  int num_states() const noexcept { return static_cast<int>(keys.size()); }
  /// -1 if the observation never occurs.
  int find(const Observation& o) const;

  static StateIndex build(const TransitionDataset& ds);

 private:
  std::map<Observation, int> lookup_;
};

// JSON-lines I/O. Dataset lines:
//   {"obs":[x,y],"next_obs":[x,y],"reward":r,"gt_action":a,"episode":e,"t":t}
// Labeled files start with a {"header":{...}} line and add "label" per record.
void write_dataset(std::ostream& out, const TransitionDataset& ds);
TransitionDataset read_dataset(std::istream& in);
void save_dataset(const TransitionDataset& ds, const std::string& path);
TransitionDataset load_dataset(const std::string& path);

void write_labeled(std::ostream& out, const LabeledDataset& lds);
LabeledDataset read_labeled(std::istream& in);
void save_labeled(const LabeledDataset& lds, const std::string& path);
LabeledDataset load_labeled(const std::string& path);

}  // namespace laq
