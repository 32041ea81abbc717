#include "laq/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace laq {

using json = nlohmann::json;

int TransitionDataset::dim() const {
  return records.empty() ? 0 : static_cast<int>(records.front().obs.size());
}

void LabeledDataset::validate() const {
  if (!source) throw std::invalid_argument("labeled dataset has no source");
  if (labels.size() != source->size()) {
    throw std::invalid_argument("label count does not match record count");
  }
  for (int l : labels) {
    if (l < 0 || l >= num_labels) throw std::invalid_argument("label out of range");
  }
}

int StateIndex::find(const Observation& o) const {
  auto it = lookup_.find(o);
  return it == lookup_.end() ? -1 : it->second;
}

StateIndex StateIndex::build(const TransitionDataset& ds) {
  StateIndex idx;
  auto intern = [&idx](const Observation& o) {
    auto [it, inserted] = idx.lookup_.try_emplace(o, static_cast<int>(idx.keys.size()));
    if (inserted) {
      idx.keys.push_back(o);
      idx.has_outgoing.push_back(0);
    }
    return it->second;
  };
  idx.obs_state.reserve(ds.size());
  idx.next_state.reserve(ds.size());
  for (const auto& r : ds.records) {
    const int s = intern(r.obs);
    idx.has_outgoing[static_cast<std::size_t>(s)] = 1;
    idx.obs_state.push_back(s);
    idx.next_state.push_back(intern(r.next_obs));
  }
  return idx;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_vec(std::string& out, const Observation& o) {
  out.push_back('[');
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (i) out.push_back(',');
    append_double(out, o[i]);
  }
  out.push_back(']');
}

std::string record_line(const Transition& r, const int* label) {
  std::string line;
  line.reserve(96);
  line += "{\"obs\":";
  append_vec(line, r.obs);
  line += ",\"next_obs\":";
  append_vec(line, r.next_obs);
  line += ",\"reward\":";
  append_double(line, r.reward);
  if (r.gt_action) {
    line += ",\"gt_action\":";
    line += std::to_string(*r.gt_action);
  }
  line += ",\"episode\":";
  line += std::to_string(r.episode);
  line += ",\"t\":";
  line += std::to_string(r.t);
  if (label) {
    line += ",\"label\":";
    line += std::to_string(*label);
  }
  line += "}\n";
  return line;
}

Transition parse_record(const json& j, std::size_t line_no) {
  try {
    Transition r;
    r.obs = j.at("obs").get<Observation>();
    r.next_obs = j.at("next_obs").get<Observation>();
    r.reward = j.at("reward").get<double>();
    if (j.contains("gt_action") && !j.at("gt_action").is_null()) r.gt_action = j.at("gt_action").get<int>();
    r.episode = j.value("episode", 0);
    r.t = j.value("t", 0);
    if (r.obs.size() != r.next_obs.size()) throw std::runtime_error("obs and next_obs differ in length");
    return r;
  } catch (const std::exception& e) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

void write_dataset(std::ostream& out, const TransitionDataset& ds) {
  for (const auto& r : ds.records) out << record_line(r, nullptr);
}

TransitionDataset read_dataset(std::istream& in) {
  TransitionDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("header")) continue;
    ds.records.push_back(parse_record(j, line_no));
  }
  return ds;
}

void save_dataset(const TransitionDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_dataset(out, ds);
}

TransitionDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset(in);
}

void write_labeled(std::ostream& out, const LabeledDataset& lds) {
  lds.validate();
  json header = {{"scheme", lds.scheme}, {"num_labels", lds.num_labels}, {"k", lds.k},
                 {"p", lds.p},           {"seed", lds.seed},             {"model_id", lds.model_id}};
  out << json{{"header", header}}.dump() << '\n';
  for (std::size_t i = 0; i < lds.size(); ++i) out << record_line(lds.record(i), &lds.labels[i]);
}

LabeledDataset read_labeled(std::istream& in) {
  auto ds = std::make_shared<TransitionDataset>();
  LabeledDataset lds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("header")) {
      const json& h = j.at("header");
      lds.scheme = h.value("scheme", "");
      lds.num_labels = h.value("num_labels", 0);
      lds.k = h.value("k", 0);
      lds.p = h.value("p", 0.0);
      lds.seed = h.value("seed", std::uint64_t{0});
      lds.model_id = h.value("model_id", "");
      have_header = true;
      continue;
    }
    ds->records.push_back(parse_record(j, line_no));
    if (!j.contains("label")) throw std::runtime_error("line " + std::to_string(line_no) + ": missing label");
    lds.labels.push_back(j.at("label").get<int>());
  }
  if (!have_header) throw std::runtime_error("labeled dataset has no header line");
  lds.source = std::move(ds);
  lds.validate();
  return lds;
}

void save_labeled(const LabeledDataset& lds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_labeled(out, lds);
}

LabeledDataset load_labeled(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_labeled(in);
}

}  // namespace laq
