#include "bricks/ad/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bricks/errors.hpp"

namespace bricks::ad {

template <class Real>
Tensor<Real> ParamSet<Real>::add(const std::string& name, int rows, int cols,
                                 std::vector<Real> values) {
  for (const Entry& e : entries_) {
    if (e.name == name) {
      throw ContractViolation("duplicate parameter name '" + name + "'");
    }
  }
  Tensor<Real> t = Tensor<Real>::parameter(rows, cols, std::move(values));
  entries_.push_back({name, t});
  return t;
}

template <class Real>
Tensor<Real> ParamSet<Real>::weight(const std::string& name, int fan_in, int fan_out,
                                    std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<Real> v(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
  for (Real& x : v) {
    x = static_cast<Real>(u(rng));
  }
  return add(name, fan_in, fan_out, std::move(v));
}

template <class Real>
Tensor<Real> ParamSet<Real>::bias(const std::string& name, int width, std::mt19937_64& rng,
                                  double bias_scale) {
  std::vector<Real> v(static_cast<std::size_t>(width), Real(0));
  if (bias_scale > 0.0) {
    std::uniform_real_distribution<double> u(-bias_scale, bias_scale);
    for (Real& x : v) {
      x = static_cast<Real>(u(rng));
    }
  }
  return add(name, 1, width, std::move(v));
}

template <class Real>
std::vector<Tensor<Real>> ParamSet<Real>::tensors() const {
  std::vector<Tensor<Real>> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) {
    out.push_back(e.tensor);
  }
  return out;
}

template <class Real>
std::size_t ParamSet<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) {
    n += e.tensor.numel();
  }
  return n;
}

template <class Real>
void ParamSet<Real>::zero_grad() {
  for (Entry& e : entries_) {
    e.tensor.zero_grad();
  }
}

template <class Real>
const Tensor<Real>& ParamSet<Real>::at(const std::string& name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) {
      return e.tensor;
    }
  }
  throw ContractViolation("no parameter named '" + name + "'");
}

template <class Real>
Checkpoint to_checkpoint(const ParamSet<Real>& params, std::map<std::string, std::string> meta) {
  Checkpoint c;
  c.meta = std::move(meta);
  for (const auto& e : params.entries()) {
    Checkpoint::Param p;
    p.name = e.name;
    p.rows = e.tensor.rows();
    p.cols = e.tensor.cols();
    p.values.reserve(e.tensor.numel());
    for (Real v : e.tensor.value()) {
      p.values.push_back(static_cast<float>(v));
    }
    c.params.push_back(std::move(p));
  }
  return c;
}

template <class Real>
void load_into(const Checkpoint& ckpt, ParamSet<Real>& params) {
  const auto& entries = params.entries();
  if (entries.size() != ckpt.params.size()) {
    throw ContractViolation("checkpoint has " + std::to_string(ckpt.params.size()) +
                            " parameters, model expects " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Checkpoint::Param& p = ckpt.params[i];
    Tensor<Real> t = entries[i].tensor;
    if (p.name != entries[i].name || p.rows != t.rows() || p.cols != t.cols()) {
      throw ContractViolation("checkpoint parameter '" + p.name + "' (" + std::to_string(p.rows) +
                              ", " + std::to_string(p.cols) + ") does not match model parameter '" +
                              entries[i].name + "' " + t.shape_string());
    }
    auto out = t.value();
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = static_cast<Real>(p.values[k]);
    }
  }
}

namespace {

void put_le32(std::ostream& out, float v) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &v, 4);
  const unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                              static_cast<unsigned char>((bits >> 8) & 0xff),
                              static_cast<unsigned char>((bits >> 16) & 0xff),
                              static_cast<unsigned char>((bits >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float get_le32(const unsigned char* b) {
  const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
  float v = 0;
  std::memcpy(&v, &bits, 4);
  return v;
}

bool valid_token(const std::string& s) {
  if (s.empty()) {
    return false;
  }
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      return false;
    }
  }
  return true;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out << "BBCKPT1\n";
  for (const auto& [k, v] : ckpt.meta) {
    if (!valid_token(k) || v.find('\n') != std::string::npos) {
      throw ContractViolation("checkpoint meta entries must be single-line, key without spaces");
    }
    out << "meta " << k << ' ' << v << '\n';
  }
  std::size_t offset = 0;
  for (const auto& p : ckpt.params) {
    if (!valid_token(p.name)) {
      throw ContractViolation("checkpoint parameter names must not contain whitespace");
    }
    out << "param " << p.name << ' ' << p.rows << ' ' << p.cols << ' ' << offset << '\n';
    offset += p.values.size() * 4;
  }
  out << "payload " << offset << '\n';
  for (const auto& p : ckpt.params) {
    for (float v : p.values) {
      put_le32(out, v);
    }
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint c;
  std::string line;
  std::size_t pos = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw ParseError("checkpoint: unexpected end of manifest", pos);
    }
    const std::size_t start = pos;
    pos += line.size() + 1;
    return start;
  };
  next_line();
  if (line != "BBCKPT1") {
    throw ParseError("checkpoint: missing BBCKPT1 magic", 0);
  }
  std::size_t payload = 0;
  std::vector<std::size_t> offsets;
  for (;;) {
    const std::size_t at = next_line();
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') {
        value.erase(0, 1);
      }
      c.meta[key] = value;
    } else if (kind == "param") {
      Checkpoint::Param p;
      std::size_t off = 0;
      if (!(ls >> p.name >> p.rows >> p.cols >> off) || p.rows < 0 || p.cols < 0) {
        throw ParseError("checkpoint: malformed param line", at);
      }
      offsets.push_back(off);
      c.params.push_back(std::move(p));
    } else if (kind == "payload") {
      if (!(ls >> payload)) {
        throw ParseError("checkpoint: malformed payload line", at);
      }
      break;
    } else {
      throw ParseError("checkpoint: unknown manifest line '" + kind + "'", at);
    }
  }
  std::vector<unsigned char> bytes(payload);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(payload));
  if (static_cast<std::size_t>(in.gcount()) != payload) {
    throw ParseError("checkpoint: truncated payload", pos + static_cast<std::size_t>(in.gcount()));
  }
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    Checkpoint::Param& p = c.params[i];
    const std::size_t n = static_cast<std::size_t>(p.rows) * static_cast<std::size_t>(p.cols);
    if (offsets[i] + n * 4 > payload) {
      throw ParseError("checkpoint: parameter '" + p.name + "' exceeds the payload", pos);
    }
    p.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      p.values[k] = get_le32(bytes.data() + offsets[i] + 4 * k);
    }
  }
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  write_checkpoint(out, ckpt);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  return read_checkpoint(in);
}

template class ParamSet<float>;
template class ParamSet<double>;
template Checkpoint to_checkpoint(const ParamSet<float>&, std::map<std::string, std::string>);
template Checkpoint to_checkpoint(const ParamSet<double>&, std::map<std::string, std::string>);
template void load_into(const Checkpoint&, ParamSet<float>&);
template void load_into(const Checkpoint&, ParamSet<double>&);

}  // namespace bricks::ad
