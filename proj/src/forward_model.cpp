#include "laq/forward_model.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace laq {

using json = nlohmann::json;

ForwardModel ForwardModel::tabular(int num_latent, int dim, std::vector<Observation> keys,
                                   std::vector<double> means) {
  if (num_latent < 1 || dim < 1) throw std::invalid_argument("forward model needs num_latent, dim >= 1");
  if (means.size() != keys.size() * static_cast<std::size_t>(num_latent) * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("tabular means have the wrong size");
  }
  ForwardModel m;
  m.mode_ = ForwardMode::Tabular;
  m.num_latent_ = num_latent;
  m.dim_ = dim;
  m.keys_ = std::move(keys);
  m.means_ = std::move(means);
  for (std::size_t i = 0; i < m.keys_.size(); ++i) {
    if (m.keys_[i].size() != static_cast<std::size_t>(dim)) throw std::invalid_argument("key dimension mismatch");
    m.lookup_.emplace(m.keys_[i], static_cast<int>(i));
  }
  return m;
}

ForwardModel ForwardModel::shared_linear(int num_latent, int dim, std::vector<double> weights,
                                         std::vector<double> bias) {
  if (num_latent < 1 || dim < 1) throw std::invalid_argument("forward model needs num_latent, dim >= 1");
  const auto k = static_cast<std::size_t>(num_latent);
  const auto d = static_cast<std::size_t>(dim);
  if (weights.size() != k * d * d || bias.size() != k * d) {
    throw std::invalid_argument("linear parameters have the wrong size");
  }
  ForwardModel m;
  m.mode_ = ForwardMode::SharedLinear;
  m.num_latent_ = num_latent;
  m.dim_ = dim;
  m.weights_ = std::move(weights);
  m.bias_ = std::move(bias);
  return m;
}

int ForwardModel::key_index(const Observation& o) const {
  auto it = lookup_.find(o);
  return it == lookup_.end() ? -1 : it->second;
}

void ForwardModel::check_dim(const Observation& o) const {
  if (o.size() != static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("dimension mismatch: model has dim " + std::to_string(dim_) +
                                ", observation has " + std::to_string(o.size()));
  }
}

void ForwardModel::predict(const Observation& o, int latent, double* out) const {
  check_dim(o);
  const auto d = static_cast<std::size_t>(dim_);
  if (mode_ == ForwardMode::Tabular) {
    const int key = key_index(o);
    if (key < 0) throw std::invalid_argument("observation not covered by the tabular model");
    const double* mu = mean(key, latent);
    for (std::size_t i = 0; i < d; ++i) out[i] = mu[i];
    return;
  }
  const double* w = weights_.data() + static_cast<std::size_t>(latent) * d * d;
  const double* b = bias_.data() + static_cast<std::size_t>(latent) * d;
  for (std::size_t i = 0; i < d; ++i) {
    double acc = b[i];
    for (std::size_t j = 0; j < d; ++j) acc += w[i * d + j] * o[j];
    out[i] = acc;
  }
}

double ForwardModel::loss(const Observation& o, int latent, const Observation& next) const {
  check_dim(next);
  std::vector<double> pred(static_cast<std::size_t>(dim_));
  predict(o, latent, pred.data());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - next[i];
    total += diff * diff;
  }
  return total;
}

int ForwardModel::best_latent(const Observation& o, const Observation& next,
                              const std::vector<char>* allowed) const {
  int best = -1;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int l = 0; l < num_latent_; ++l) {
    if (allowed && !(*allowed)[static_cast<std::size_t>(l)]) continue;
    const double v = loss(o, l, next);
    if (best < 0 || v < best_loss) {
      best = l;
      best_loss = v;
    }
  }
  return best;
}

std::string ForwardModel::to_json_string() const {
  json doc;
  doc["num_latent"] = num_latent_;
  doc["dim"] = dim_;
  const auto k = static_cast<std::size_t>(num_latent_);
  const auto d = static_cast<std::size_t>(dim_);
  if (mode_ == ForwardMode::Tabular) {
    doc["mode"] = "tabular";
    doc["keys"] = keys_;
    json mu = json::array();
    for (std::size_t key = 0; key < keys_.size(); ++key) {
      json per_key = json::array();
      for (std::size_t l = 0; l < k; ++l) {
        const double* p = mean(static_cast<int>(key), static_cast<int>(l));
        per_key.push_back(std::vector<double>(p, p + d));
      }
      mu.push_back(per_key);
    }
    doc["mu"] = mu;
  } else {
    doc["mode"] = "linear";
    json w = json::array();
    json b = json::array();
    for (std::size_t l = 0; l < k; ++l) {
      json rows = json::array();
      for (std::size_t i = 0; i < d; ++i) {
        const double* row = weights_.data() + (l * d + i) * d;
        rows.push_back(std::vector<double>(row, row + d));
      }
      w.push_back(rows);
      b.push_back(std::vector<double>(bias_.begin() + static_cast<std::ptrdiff_t>(l * d),
                                      bias_.begin() + static_cast<std::ptrdiff_t>((l + 1) * d)));
    }
    doc["W"] = w;
    doc["b"] = b;
  }
  return doc.dump();
}

ForwardModel ForwardModel::from_json_string(const std::string& text) {
  const json doc = json::parse(text);
  const std::string mode = doc.at("mode").get<std::string>();
  const int k = doc.at("num_latent").get<int>();
  const int d = doc.at("dim").get<int>();
  if (mode == "tabular") {
    auto keys = doc.at("keys").get<std::vector<Observation>>();
    std::vector<double> means;
    for (const auto& per_key : doc.at("mu")) {
      if (per_key.size() != static_cast<std::size_t>(k)) throw std::invalid_argument("mu: wrong latent count");
      for (const auto& v : per_key) {
        auto vec = v.get<std::vector<double>>();
        if (vec.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("mu: wrong dimension");
        means.insert(means.end(), vec.begin(), vec.end());
      }
    }
    return tabular(k, d, std::move(keys), std::move(means));
  }
  if (mode == "linear") {
    std::vector<double> w;
    std::vector<double> b;
    for (const auto& rows : doc.at("W")) {
      for (const auto& row : rows) {
        auto vec = row.get<std::vector<double>>();
        w.insert(w.end(), vec.begin(), vec.end());
      }
    }
    for (const auto& row : doc.at("b")) {
      auto vec = row.get<std::vector<double>>();
      b.insert(b.end(), vec.begin(), vec.end());
    }
    return shared_linear(k, d, std::move(w), std::move(b));
  }
  throw std::invalid_argument("unknown forward model mode '" + mode + "'");
}

void ForwardModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json_string() << '\n';
}

ForwardModel ForwardModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

}  // namespace laq
