#include "normkit/state_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace normkit {

namespace {

constexpr char kMagic[4] = {'N', 'K', 'T', '1'};

void append_field(nlohmann::json& fields, std::vector<double>& payload, const std::string& name,
                  const double* data, std::size_t count) {
  fields.push_back({{"name", name}, {"offset", payload.size()}, {"count", count}});
  payload.insert(payload.end(), data, data + count);
}

std::vector<double> read_field(const nlohmann::json& fields, const std::vector<double>& payload,
                               const std::string& name) {
  for (const auto& f : fields) {
    if (f.at("name") == name) {
      const std::size_t offset = f.at("offset");
      const std::size_t count = f.at("count");
      if (offset + count > payload.size())
        throw std::runtime_error("layer state: field '" + name + "' out of bounds");
      return {payload.begin() + static_cast<std::ptrdiff_t>(offset),
              payload.begin() + static_cast<std::ptrdiff_t>(offset + count)};
    }
  }
  throw std::runtime_error("layer state: missing field '" + name + "'");
}

}  // namespace

void save_layer_state(const LayerState& state, const std::string& path) {
  nlohmann::json fields = nlohmann::json::array();
  std::vector<double> payload;
  append_field(fields, payload, "gamma", state.gamma.data(), state.gamma.size());
  append_field(fields, payload, "beta", state.beta.data(), state.beta.size());
  append_field(fields, payload, "running_mean", state.running_mean.data(),
               state.running_mean.size());
  append_field(fields, payload, "running_whitener", state.running_whitener.data(),
               state.running_whitener.size());

  nlohmann::json header = {
      {"version", 1},
      {"d", state.d},
      {"momentum", state.momentum},
      {"mode", state.mode == LayerMode::Train ? "train" : "eval"},
      {"bw_stat_mode", state.bw_stat_mode == BwStatMode::Whitener ? "whitener" : "covariance"},
      {"bw_block_channels", state.bw_block_channels},
      {"update_count", state.update_count},
      {"whitener_rows", state.running_whitener.rows()},
      {"whitener_cols", state.running_whitener.cols()},
      {"eps", state.bw_cfg.eps},
      {"iterations", state.bw_cfg.iterations},
      {"method", state.bw_cfg.method == WhitenMethod::Zca ? "zca" : "itn"},
      {"fields", fields},
  };
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_layer_state: cannot open " + path);
  out.write(kMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_layer_state: write failed for " + path);
}

LayerState load_layer_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_layer_state: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_layer_state: bad magic in " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string header_str(len, '\0');
  in.read(header_str.data(), len);
  if (!in) throw std::runtime_error("load_layer_state: truncated header in " + path);
  const nlohmann::json header = nlohmann::json::parse(header_str);
  if (header.at("version") != 1)
    throw std::runtime_error("load_layer_state: unsupported version");

  std::vector<double> payload;
  {
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() % sizeof(double) != 0)
      throw std::runtime_error("load_layer_state: payload not a multiple of 8 bytes");
    payload.resize(bytes.size() / sizeof(double));
    std::memcpy(payload.data(), bytes.data(), bytes.size());
  }

  LayerState s;
  s.d = header.at("d");
  s.momentum = header.at("momentum");
  s.mode = header.at("mode") == "train" ? LayerMode::Train : LayerMode::Eval;
  s.bw_stat_mode =
      header.at("bw_stat_mode") == "whitener" ? BwStatMode::Whitener : BwStatMode::Covariance;
  s.bw_block_channels = header.at("bw_block_channels");
  s.update_count = header.at("update_count");
  s.bw_cfg.eps = header.at("eps");
  s.bw_cfg.iterations = header.at("iterations");
  s.bw_cfg.method = header.at("method") == "zca" ? WhitenMethod::Zca : WhitenMethod::Itn;

  const auto& fields = header.at("fields");
  s.gamma = read_field(fields, payload, "gamma");
  s.beta = read_field(fields, payload, "beta");
  s.running_mean = read_field(fields, payload, "running_mean");
  const std::size_t wr = header.at("whitener_rows");
  const std::size_t wc = header.at("whitener_cols");
  s.running_whitener = Mat(wr, wc, read_field(fields, payload, "running_whitener"));
  return s;
}

}  // namespace normkit
