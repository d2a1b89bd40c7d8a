#include "normkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "normkit/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace normkit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string get_or(const ConfigMap& cfg, const std::string& section, const std::string& key,
                   const std::string& fallback) {
  const auto sit = cfg.find(section);
  if (sit == cfg.end()) return fallback;
  const auto kit = sit->second.find(key);
  return kit == sit->second.end() ? fallback : kit->second;
}

NormSetting norm_setting_from(const std::string& method, std::size_t groups,
                              const ConfigMap& cfg) {
  NormSetting n;
  n.kind = norm_kind_from_string(method);
  n.groups = groups;
  n.whiten.eps = std::stod(get_or(cfg, "model", "eps", "1e-5"));
  n.whiten.iterations = std::stoi(get_or(cfg, "model", "itn_iterations", "5"));
  const std::string wm = get_or(cfg, "model", "whiten_method", "zca");
  n.whiten.method = wm == "itn" ? WhitenMethod::Itn : WhitenMethod::Zca;
  n.bw_block = static_cast<std::size_t>(std::stoul(get_or(cfg, "model", "bw_block", "0")));
  n.bw_stat_mode = get_or(cfg, "model", "bw_stats", "whitener") == "covariance"
                       ? BwStatMode::Covariance
                       : BwStatMode::Whitener;
  n.momentum = std::stod(get_or(cfg, "model", "momentum", "0.1"));
  return n;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw std::invalid_argument("ExperimentSpec: need at least one seed");
  if (batch < 1) throw std::invalid_argument("ExperimentSpec: batch size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("ExperimentSpec: epochs must be >= 1");
  if (lrs.empty()) throw std::invalid_argument("ExperimentSpec: need at least one learning rate");
}

std::pair<Dataset, Dataset> load_datasets(const DatasetSpec& spec) {
  Dataset train, val;
  if (spec.kind == "idx") {
    train = load_idx(spec.images_path, spec.labels_path, 0, spec.n_train);
    if (!spec.val_images_path.empty()) {
      val = load_idx(spec.val_images_path, spec.val_labels_path, 0, spec.n_val);
    } else {
      val = load_idx(spec.images_path, spec.labels_path, spec.n_train, spec.n_val);
    }
  } else if (spec.kind == "synthetic") {
    train = synthetic_blobs(spec.n_train, spec.data_seed);
    val = synthetic_blobs(spec.n_val, spec.data_seed + 0x9e3779b9ull);
  } else {
    throw std::invalid_argument("load_datasets: unknown dataset kind '" + spec.kind + "'");
  }
  if (spec.random_labels) train = make_random_labels(train, train.num_classes, spec.label_seed);
  return {std::move(train), std::move(val)};
}

TrainCurve train_one(const ExperimentSpec& spec, const Dataset& train, const Dataset& val,
                     double lr, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = train.size();
  const std::size_t m = spec.batch;
  if (n < m) throw std::invalid_argument("train_one: batch larger than dataset");

  Mlp net(train.dim(), spec.hidden, train.num_classes, spec.norm, seed);
  Rng shuffle_rng(seed ^ 0x5deece66dull);

  TrainCurve curve;
  curve.norm_label = to_string(spec.norm.kind);
  curve.batch = m;
  curve.groups = spec.norm.groups;
  curve.lr = lr;
  curve.seed = seed;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double correct = 0.0, loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start + m <= n; start += m) {
      Mat xb(train.dim(), m);
      std::vector<int> yb(m);
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t src = order[start + j];
        for (std::size_t i = 0; i < train.dim(); ++i) xb(i, j) = train.x(i, src);
        yb[j] = train.labels[src];
      }
      const Mat logits = net.forward(xb, LayerMode::Train);
      const SoftmaxResult sm = softmax_cross_entropy(logits, yb);
      if (!std::isfinite(sm.loss)) {
        curve.diverged = true;
        return curve;
      }
      net.backward(sm.d_logits);
      net.sgd_step(lr, spec.sgd_momentum);
      correct += sm.accuracy * static_cast<double>(m);
      loss_sum += sm.loss * static_cast<double>(m);
      seen += m;
    }
    curve.train_acc.push_back(correct / static_cast<double>(seen));
    curve.train_loss.push_back(loss_sum / static_cast<double>(seen));
  }

  if (val.size() > 0) {
    // Eval in fixed-size chunks so BN/BW use the frozen statistics and the
    // result cannot depend on how the validation set is batched.
    const std::size_t chunk = 256;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < val.size(); start += chunk) {
      const std::size_t len = std::min(chunk, val.size() - start);
      Mat xb(val.dim(), len);
      for (std::size_t j = 0; j < len; ++j)
        for (std::size_t i = 0; i < val.dim(); ++i) xb(i, j) = val.x(i, start + j);
      const Mat logits = net.forward(xb, LayerMode::Eval);
      for (std::size_t j = 0; j < len; ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < logits.rows(); ++i)
          if (logits(i, j) > logits(arg, j)) arg = i;
        if (arg == static_cast<std::size_t>(val.labels[start + j])) ++correct;
      }
    }
    curve.val_acc = static_cast<double>(correct) / static_cast<double>(val.size());
  }
  return curve;
}

std::vector<TrainCurve> train(const ExperimentSpec& spec) {
  spec.validate();
  const auto [tr, va] = load_datasets(spec.dataset);
  std::vector<TrainCurve> out;
  for (double lr : spec.lrs)
    for (std::uint64_t seed : spec.seeds) out.push_back(train_one(spec, tr, va, lr, seed));
  return out;
}

Table sweep(const ExperimentSpec& base, const std::vector<SweepCell>& cells, int jobs) {
  base.validate();
  if (cells.empty()) throw std::invalid_argument("sweep: empty grid");
  const std::pair<Dataset, Dataset> data = load_datasets(base.dataset);
  const Dataset& tr = data.first;
  const Dataset& va = data.second;
#ifndef _OPENMP
  (void)jobs;
#endif

  struct Job {
    std::size_t cell;
    double lr;
    std::uint64_t seed;
  };
  std::vector<Job> jobs_list;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (double lr : base.lrs)
      for (std::uint64_t seed : base.seeds) jobs_list.push_back({c, lr, seed});

  std::vector<std::vector<std::vector<Cell>>> rows_per_job(jobs_list.size());
#ifdef _OPENMP
  const int max_threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads)
#endif
  for (std::ptrdiff_t ji = 0; ji < static_cast<std::ptrdiff_t>(jobs_list.size()); ++ji) {
    const Job& job = jobs_list[static_cast<std::size_t>(ji)];
    ExperimentSpec spec = base;
    spec.norm = cells[job.cell].norm;
    spec.batch = cells[job.cell].batch;
    auto& rows = rows_per_job[static_cast<std::size_t>(ji)];
    const std::string method = to_string(spec.norm.kind);
    try {
      const TrainCurve curve = train_one(spec, tr, va, job.lr, job.seed);
      for (std::size_t e = 0; e < curve.train_acc.size(); ++e) {
        rows.push_back({method, static_cast<long long>(spec.batch),
                        static_cast<long long>(spec.norm.groups), job.lr,
                        static_cast<long long>(job.seed), static_cast<long long>(e + 1),
                        std::string("train"), curve.train_acc[e],
                        std::string(curve.diverged ? "diverged" : "ok")});
      }
      rows.push_back({method, static_cast<long long>(spec.batch),
                      static_cast<long long>(spec.norm.groups), job.lr,
                      static_cast<long long>(job.seed),
                      static_cast<long long>(curve.train_acc.size()), std::string("val"),
                      curve.val_acc, std::string(curve.diverged ? "diverged" : "ok")});
    } catch (const std::exception& ex) {
      rows.push_back({method, static_cast<long long>(spec.batch),
                      static_cast<long long>(spec.norm.groups), job.lr,
                      static_cast<long long>(job.seed), 0LL, std::string("train"), 0.0,
                      std::string("error: ") + ex.what()});
    }
  }

  Table table({"method", "m", "g", "lr", "seed", "epoch", "split", "accuracy", "status"});
  for (auto& rows : rows_per_job)
    for (auto& r : rows) table.add_row(std::move(r));
  table.sort_rows();
  return table;
}

Table best_over_lr(const Table& long_format) {
  // Reduce the long-format rows: for each (method, m, g, seed), the final
  // train accuracy maximized over learning rates.
  struct Key {
    std::string method;
    std::string m, g, seed;
    bool operator<(const Key& other) const {
      return std::tie(method, m, g, seed) < std::tie(other.method, other.m, other.g, other.seed);
    }
  };
  // Re-parse the CSV form; the Table type is write-oriented.
  std::stringstream ss(long_format.to_csv());
  std::string line;
  std::getline(ss, line);  // header
  std::map<Key, std::map<std::string, std::pair<long long, double>>> final_acc;
  while (std::getline(ss, line)) {
    const std::vector<std::string> f = split_list(line);
    if (f.size() != 9 || f[6] != "train" || f[8] != "ok") continue;
    const Key key{f[0], f[1], f[2], f[4]};
    const long long epoch = std::stoll(f[5]);
    auto& slot = final_acc[key][f[3]];
    if (epoch >= slot.first) slot = {epoch, std::stod(f[7])};
  }
  Table out({"method", "m", "g", "seed", "best_lr", "best_train_accuracy"});
  for (const auto& [key, by_lr] : final_acc) {
    std::string best_lr;
    double best = -1.0;
    for (const auto& [lr, acc] : by_lr) {
      if (acc.second > best) {
        best = acc.second;
        best_lr = lr;
      }
    }
    out.add_row({key.method, std::stoll(key.m), std::stoll(key.g), std::stoll(key.seed),
                 best_lr, best});
  }
  out.sort_rows();
  return out;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::string section = "global";
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    cfg[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

SweepConfig sweep_from_config(const ConfigMap& cfg) {
  SweepConfig sc;
  ExperimentSpec& base = sc.base;

  base.dataset.kind = get_or(cfg, "dataset", "kind", "synthetic");
  base.dataset.n_train = std::stoul(get_or(cfg, "dataset", "n_train", "10000"));
  base.dataset.n_val = std::stoul(get_or(cfg, "dataset", "n_val", "2000"));
  base.dataset.data_seed = std::stoull(get_or(cfg, "dataset", "seed", "11"));
  base.dataset.images_path = get_or(cfg, "dataset", "images", "");
  base.dataset.labels_path = get_or(cfg, "dataset", "labels", "");
  base.dataset.val_images_path = get_or(cfg, "dataset", "val_images", "");
  base.dataset.val_labels_path = get_or(cfg, "dataset", "val_labels", "");
  base.dataset.random_labels = get_or(cfg, "dataset", "random_labels", "false") == "true";
  base.dataset.label_seed = std::stoull(get_or(cfg, "dataset", "label_seed", "99"));

  base.hidden.clear();
  for (const std::string& w : split_list(get_or(cfg, "model", "hidden", "256,256,256,256")))
    base.hidden.push_back(std::stoul(w));
  base.classes = std::stoi(get_or(cfg, "model", "classes", "10"));

  base.epochs = std::stoi(get_or(cfg, "train", "epochs", "50"));
  base.sgd_momentum = std::stod(get_or(cfg, "train", "sgd_momentum", "0"));
  base.lrs.clear();
  for (const std::string& lr : split_list(get_or(cfg, "train", "lrs", "0.1")))
    base.lrs.push_back(std::stod(lr));
  base.seeds.clear();
  for (const std::string& s : split_list(get_or(cfg, "train", "seeds", "1")))
    base.seeds.push_back(std::stoull(s));

  const std::vector<std::string> methods = split_list(get_or(cfg, "sweep", "methods", "bn"));
  const std::vector<std::string> batches = split_list(get_or(cfg, "sweep", "batch_sizes", "16"));
  const std::vector<std::string> groups = split_list(get_or(cfg, "sweep", "groups", "1"));
  for (const std::string& method : methods) {
    const NormKind kind = norm_kind_from_string(method);
    const bool grouped = kind == NormKind::GroupNorm || kind == NormKind::GroupWhiten;
    const bool batched = kind == NormKind::BatchNorm || kind == NormKind::BatchWhiten;
    for (const std::string& b : batches) {
      if (!batched && b != batches.front()) continue;  // batch grid only varies batch methods
      for (const std::string& g : groups) {
        if (!grouped && g != groups.front()) continue;
        SweepCell cell;
        cell.norm = norm_setting_from(method, grouped ? std::stoul(g) : 1, cfg);
        cell.batch = std::stoul(b);
        sc.cells.push_back(cell);
      }
    }
  }
  if (!base.hidden.empty()) base.batch = std::stoul(batches.front());
  return sc;
}

}  // namespace normkit
