#include "navar/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "navar/error.hpp"
#include "navar/io_util.hpp"

namespace navar {

namespace {

// Fewest %g digits that read back to the same double.
std::string shortest(double v) {
  char buffer[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, v);
    if (std::strtod(buffer, nullptr) == v) break;
  }
  return buffer;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorCode::kConfig, "config key '" + key + "' expects a non-negative integer, got '" +
                                 text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!parse_double(text, v)) {
    fail(ErrorCode::kConfig, "config key '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

}  // namespace

void NavarConfig::validate() const {
  if (lags < 1) fail(ErrorCode::kConfig, "K (lags) must be >= 1");
  if (hidden_units < 1) fail(ErrorCode::kConfig, "hidden_units must be >= 1");
  if (hidden_layers < 1) fail(ErrorCode::kConfig, "hidden_layers must be >= 1");
  if (backbone == BackboneKind::kLstm && hidden_layers != 1) {
    fail(ErrorCode::kConfig, "lstm backbone supports hidden_layers = 1 only");
  }
  if (batch_size < 1) fail(ErrorCode::kConfig, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::kConfig, "learning_rate must be > 0");
  if (!(lambda >= 0.0)) fail(ErrorCode::kConfig, "lambda must be >= 0");
  if (!(mu >= 0.0)) fail(ErrorCode::kConfig, "mu must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    fail(ErrorCode::kConfig, "val_fraction must lie in [0, 1)");
  }
}

void NavarConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "backbone") {
    backbone = parse_backbone_kind(value);
  } else if (key == "K" || key == "lags") {
    lags = parse_unsigned(key, value);
  } else if (key == "hidden_units") {
    hidden_units = parse_unsigned(key, value);
  } else if (key == "hidden_layers") {
    hidden_layers = parse_unsigned(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_unsigned(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_real(key, value);
  } else if (key == "lambda") {
    lambda = parse_real(key, value);
  } else if (key == "mu") {
    mu = parse_real(key, value);
  } else if (key == "epochs") {
    epochs = parse_unsigned(key, value);
  } else if (key == "seed") {
    seed = parse_unsigned(key, value);
  } else if (key == "val_fraction") {
    val_fraction = parse_real(key, value);
  } else {
    fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> NavarConfig::entries() const {
  return {
      {"backbone", backbone_kind_name(backbone)},
      {"K", std::to_string(lags)},
      {"hidden_units", std::to_string(hidden_units)},
      {"hidden_layers", std::to_string(hidden_layers)},
      {"batch_size", std::to_string(batch_size)},
      {"learning_rate", shortest(learning_rate)},
      {"lambda", shortest(lambda)},
      {"mu", shortest(mu)},
      {"epochs", std::to_string(epochs)},
      {"seed", std::to_string(seed)},
      {"val_fraction", shortest(val_fraction)},
  };
}

NavarConfig parse_config(const std::string& text, NavarConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, "config line " + std::to_string(line_no) + " is not key=value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

NavarConfig load_config_file(const std::string& path, NavarConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), base);
}

std::string format_config(const NavarConfig& config) {
  std::string out;
  for (const auto& [key, value] : config.entries()) out += key + "=" + value + "\n";
  return out;
}

namespace {

NavarConfig tuned(BackboneKind kind, std::size_t k, std::size_t hidden, std::size_t layers,
                  std::size_t batch, double lr, double lambda, double mu) {
  NavarConfig c;
  c.backbone = kind;
  c.lags = k;
  c.hidden_units = hidden;
  c.hidden_layers = layers;
  c.batch_size = batch;
  c.learning_rate = lr;
  c.lambda = lambda;
  c.mu = mu;
  c.epochs = 5000;
  return c;
}

constexpr BackboneKind kMlp = BackboneKind::kMlp;
constexpr BackboneKind kLstm = BackboneKind::kLstm;

const std::vector<Preset>& preset_table() {
  static const std::vector<Preset> table = {
      // MLP, CauseMe datasets.
      {"nonlinear-var-n3", "MLP, nonlinear VAR N=3 T=300",
       tuned(kMlp, 5, 32, 1, 64, 0.00005, 0.1344, 2.903e-3)},
      {"nonlinear-var-n5", "MLP, nonlinear VAR N=5 T=300",
       tuned(kMlp, 5, 16, 1, 64, 0.0001, 0.1596, 2.420e-3)},
      {"nonlinear-var-n10", "MLP, nonlinear VAR N=10 T=300",
       tuned(kMlp, 5, 128, 1, 64, 0.0005, 0.2014, 8.557e-3)},
      {"nonlinear-var-n20", "MLP, nonlinear VAR N=20 T=300",
       tuned(kMlp, 5, 32, 1, 64, 0.0002, 0.2434, 4.508e-3)},
      {"climate", "MLP, climate", tuned(kMlp, 2, 32, 1, 16, 0.0002, 0.3924, 4.322e-3)},
      {"weather", "MLP, weather", tuned(kMlp, 5, 32, 1, 64, 0.0001, 0.0560, 4.903e-3)},
      {"river", "MLP, river run-off", tuned(kMlp, 5, 8, 1, 256, 0.0001, 0.1708, 5.092e-4)},
      // LSTM, CauseMe datasets.
      {"lstm-nonlinear-var-n3", "LSTM, nonlinear VAR N=3 T=300",
       tuned(kLstm, 5, 16, 1, 64, 0.0001, 0.1370, 8.952e-4)},
      {"lstm-nonlinear-var-n5", "LSTM, nonlinear VAR N=5 T=300",
       tuned(kLstm, 5, 32, 1, 32, 0.00005, 0.2445, 2.6756e-4)},
      {"lstm-nonlinear-var-n10", "LSTM, nonlinear VAR N=10 T=300",
       tuned(kLstm, 5, 64, 1, 128, 0.0001, 0.0784, 7.1237e-4)},
      {"lstm-nonlinear-var-n20", "LSTM, nonlinear VAR N=20 T=300",
       tuned(kLstm, 5, 128, 1, 64, 0.00005, 0.3512, 1.901e-6)},
      {"lstm-climate", "LSTM, climate", tuned(kLstm, 2, 64, 1, 128, 0.0002, 0.2334, 6.231e-4)},
      {"lstm-weather", "LSTM, weather", tuned(kLstm, 5, 8, 1, 256, 0.0005, 0.0172, 1.687e-3)},
      {"lstm-river", "LSTM, river run-off",
       tuned(kLstm, 5, 128, 1, 128, 0.001, 0.0544, 4.465e-4)},
      // MLP, DREAM3 gene expression.
      {"dream3-ecoli1", "MLP, DREAM3 E.coli 1",
       tuned(kMlp, 2, 10, 1, 128, 0.0005, 0.1883, 1.114e-4)},
      {"dream3-ecoli2", "MLP, DREAM3 E.coli 2",
       tuned(kMlp, 2, 10, 1, 32, 0.001, 0.2011, 1.710e-4)},
      {"dream3-yeast1", "MLP, DREAM3 Yeast 1",
       tuned(kMlp, 2, 10, 2, 16, 0.002, 0.2697, 1.424e-4)},
      {"dream3-yeast2", "MLP, DREAM3 Yeast 2",
       tuned(kMlp, 2, 10, 1, 256, 0.0002, 0.1563, 2.013e-4)},
      {"dream3-yeast3", "MLP, DREAM3 Yeast 3",
       tuned(kMlp, 2, 10, 1, 16, 0.0002, 0.1559, 1.644e-4)},
      // LSTM, DREAM3 gene expression.
      {"lstm-dream3-ecoli1", "LSTM, DREAM3 E.coli 1",
       tuned(kLstm, 21, 10, 1, 46, 0.002, 0.2208, 1.094e-5)},
      {"lstm-dream3-ecoli2", "LSTM, DREAM3 E.coli 2",
       tuned(kLstm, 21, 10, 1, 46, 0.002, 0.1958, 3.233e-6)},
      {"lstm-dream3-yeast1", "LSTM, DREAM3 Yeast 1",
       tuned(kLstm, 21, 10, 1, 46, 0.002, 0.2343, 5.309e-5)},
      {"lstm-dream3-yeast2", "LSTM, DREAM3 Yeast 2",
       tuned(kLstm, 21, 10, 1, 46, 0.002, 0.2189, 1.987e-5)},
      {"lstm-dream3-yeast3", "LSTM, DREAM3 Yeast 3",
       tuned(kLstm, 21, 10, 1, 46, 0.002, 0.2128, 1.049e-5)},
  };
  return table;
}

}  // namespace

std::span<const Preset> presets() { return preset_table(); }

const Preset& find_preset(const std::string& name) {
  for (const Preset& p : preset_table()) {
    if (name == p.name) return p;
  }
  fail(ErrorCode::kConfig, "unknown preset '" + name + "'");
}

}  // namespace navar
