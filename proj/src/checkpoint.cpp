// Checkpoint layout (little-endian, native doubles):
//   "NAVARCKP" | u32 format | u32 backbone | config | u64 N | u8 trained
//   | names | mean[N] | stddev[N] | beta[N] | u64 tensor count
//   | per tensor: u64 rank, u64 dims[rank], f64 data[] | u64 FNV-1a of all
//   preceding bytes.
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "navar/error.hpp"
#include "navar/model.hpp"

namespace navar {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'V', 'A', 'R', 'C', 'K', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    put_bytes(s.data(), s.size());
  }
  void put_doubles(std::span<const double> values) {
    for (double v : values) put(v);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t limit, std::string path)
      : bytes_(bytes), limit_(limit), path_(std::move(path)) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }
  std::string get_string(const char* what) {
    const auto size = get<std::uint64_t>(what);
    need(size, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), size);
    offset_ += size;
    return s;
  }
  std::vector<double> get_doubles(std::uint64_t count, const char* what) {
    if (count > (limit_ - offset_) / sizeof(double)) corrupt(what);
    std::vector<double> out(count);
    for (auto& v : out) v = get<double>(what);
    return out;
  }
  std::size_t offset() const { return offset_; }
  [[noreturn]] void corrupt(const char* what) const {
    fail(ErrorCode::kParse, path_ + ": corrupt checkpoint reading " + what + " at offset " +
                                std::to_string(offset_));
  }

 private:
  void need(std::uint64_t size, const char* what) const {
    if (size > limit_ - offset_) corrupt(what);
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t limit_;
  std::size_t offset_ = 0;
  std::string path_;
};

}  // namespace

void save_checkpoint(const NavarModel& model, const std::string& path) {
  const NavarConfig& c = model.config();
  const std::size_t n = model.variables();
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint32_t>(c.backbone == BackboneKind::kMlp ? 0u : 1u);
  w.put<std::uint64_t>(c.lags);
  w.put<std::uint64_t>(c.hidden_units);
  w.put<std::uint64_t>(c.hidden_layers);
  w.put<std::uint64_t>(c.batch_size);
  w.put<std::uint64_t>(c.epochs);
  w.put<std::uint64_t>(c.seed);
  w.put<double>(c.learning_rate);
  w.put<double>(c.lambda);
  w.put<double>(c.mu);
  w.put<double>(c.val_fraction);
  w.put<std::uint64_t>(n);
  w.put<std::uint8_t>(model.trained() ? 1 : 0);

  const auto& names = model.variable_names();
  w.put<std::uint64_t>(names.size());
  for (const auto& name : names) w.put_string(name);

  const NormalizationStats& stats = model.normalization();
  const bool has_stats = stats.mean.size() == n;
  w.put<std::uint8_t>(has_stats ? 1 : 0);
  if (has_stats) {
    w.put_doubles(stats.mean);
    w.put_doubles(stats.stddev);
  }
  w.put_doubles(model.beta().values());

  const auto params = model.parameters();
  w.put<std::uint64_t>(params.size() - 1);  // beta already written
  for (std::size_t k = 0; k + 1 < params.size(); ++k) {
    const Tensor& t = *params[k];
    w.put<std::uint64_t>(t.rank());
    for (std::size_t d : t.shape()) w.put<std::uint64_t>(d);
    w.put_doubles(t.values());
  }
  w.put<std::uint64_t>(fnv1a(w.bytes().data(), w.bytes().size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint '" + path + "'");
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) fail(ErrorCode::kIo, "failed writing checkpoint '" + path + "'");
}

NavarModel load_checkpoint(const std::string& path, std::optional<BackboneKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint64_t)) {
    fail(ErrorCode::kParse, path + ": corrupt checkpoint, truncated at offset " +
                                std::to_string(bytes.size()));
  }
  const std::size_t payload = bytes.size() - sizeof(std::uint64_t);
  Reader r(bytes, payload, path);

  char magic[8];
  for (char& ch : magic) ch = static_cast<char>(r.get<std::uint8_t>("magic"));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::kParse, path + ": not a checkpoint (bad magic at offset 0)");
  }
  const auto format = r.get<std::uint32_t>("format version");
  if (format != kFormatVersion) {
    fail(ErrorCode::kVersion, path + ": checkpoint format " + std::to_string(format) +
                                  ", this build reads " + std::to_string(kFormatVersion));
  }

  std::uint64_t stored_sum = 0;
  std::memcpy(&stored_sum, bytes.data() + payload, sizeof(stored_sum));
  if (stored_sum != fnv1a(bytes.data(), payload)) {
    fail(ErrorCode::kParse, path + ": corrupt checkpoint, checksum mismatch at offset " +
                                std::to_string(payload));
  }

  const auto kind_tag = r.get<std::uint32_t>("backbone");
  if (kind_tag > 1) r.corrupt("backbone");
  NavarConfig c;
  c.backbone = kind_tag == 0 ? BackboneKind::kMlp : BackboneKind::kLstm;
  if (expected && *expected != c.backbone) {
    fail(ErrorCode::kVersion, path + ": checkpoint holds a " + backbone_kind_name(c.backbone) +
                                  " model, expected " + backbone_kind_name(*expected));
  }
  c.lags = r.get<std::uint64_t>("K");
  c.hidden_units = r.get<std::uint64_t>("hidden_units");
  c.hidden_layers = r.get<std::uint64_t>("hidden_layers");
  c.batch_size = r.get<std::uint64_t>("batch_size");
  c.epochs = r.get<std::uint64_t>("epochs");
  c.seed = r.get<std::uint64_t>("seed");
  c.learning_rate = r.get<double>("learning_rate");
  c.lambda = r.get<double>("lambda");
  c.mu = r.get<double>("mu");
  c.val_fraction = r.get<double>("val_fraction");
  const auto n = r.get<std::uint64_t>("N");
  const bool trained = r.get<std::uint8_t>("trained flag") != 0;
  try {
    c.validate();
  } catch (const Error&) {
    r.corrupt("config");
  }
  if (n == 0 || n > (1u << 20)) r.corrupt("N");

  std::vector<std::string> names(r.get<std::uint64_t>("name count"));
  if (!names.empty() && names.size() != n) r.corrupt("name count");
  for (auto& name : names) name = r.get_string("variable name");

  NormalizationStats stats;
  if (r.get<std::uint8_t>("stats flag") != 0) {
    stats.mean = r.get_doubles(n, "normalization mean");
    stats.stddev = r.get_doubles(n, "normalization stddev");
  }
  Tensor beta({1, n}, r.get_doubles(n, "beta"));

  NavarModel model = NavarModel::initialized(c, n);
  auto params = model.parameters();
  const auto count = r.get<std::uint64_t>("tensor count");
  if (count != params.size() - 1) r.corrupt("tensor count");
  for (std::size_t k = 0; k + 1 < params.size(); ++k) {
    Tensor& target = *params[k];
    const auto rank = r.get<std::uint64_t>("tensor rank");
    if (rank != target.rank()) r.corrupt("tensor rank");
    for (std::size_t d = 0; d < rank; ++d) {
      if (r.get<std::uint64_t>("tensor shape") != target.shape()[d]) r.corrupt("tensor shape");
    }
    target.storage() = r.get_doubles(target.size(), "tensor data");
  }
  if (r.offset() != payload) r.corrupt("trailing bytes");
  model.beta() = std::move(beta);
  model.set_normalization(std::move(stats));
  model.set_variable_names(std::move(names));
  if (trained) model.mark_trained();
  return model;
}

}  // namespace navar
