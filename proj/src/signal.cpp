#include "mdlshrink/signal.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mdl {

void Dataset::validate() const {
  if (!is_power_of_two(shape[0]) || (is_2d() && !is_power_of_two(shape[1])))
    throw std::invalid_argument("Dataset: shape dimensions must be powers of two");
  if (values.size() != size()) throw std::invalid_argument("Dataset: value count != shape");
  if (!truth.empty() && truth.size() != size())
    throw std::invalid_argument("Dataset: truth shape mismatch");
  if (noise_sigma < 0.0) throw std::invalid_argument("Dataset: negative noise sigma");
}

namespace {

int sgn(double x) { return (x > 0) - (x < 0); }

const double kBlockT[] = {0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81};
const double kBlockH[] = {4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2};
const double kBumpH[] = {4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
const double kBumpW[] = {0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005};

}  // namespace

double dj_formula(const std::string& name, double t) {
  if (name == "blocks") {
    double v = 0.0;
    for (int j = 0; j < 11; ++j) v += kBlockH[j] * (1.0 + sgn(t - kBlockT[j])) / 2.0;
    return v;
  }
  if (name == "bumps") {
    double v = 0.0;
    for (int j = 0; j < 11; ++j) {
      const double u = (t - kBlockT[j]) / kBumpW[j];
      v += kBumpH[j] * std::pow(1.0 + std::abs(u), -4.0);
    }
    return v;
  }
  if (name == "heavisine")
    return 4.0 * std::sin(4.0 * M_PI * t) - sgn(t - 0.3) - sgn(0.72 - t);
  if (name == "doppler") {
    const double eps = 0.05;
    return std::sqrt(std::max(0.0, t * (1.0 - t))) * std::sin(2.0 * M_PI * (1.0 + eps) / (t + eps));
  }
  throw std::invalid_argument("unknown test signal: " + name);
}

Dataset gen_test_signal(const std::string& name, std::size_t n) {
  if (n < 8 || !is_power_of_two(n)) throw std::invalid_argument("gen_test_signal: n must be a power of two >= 8");
  Dataset d;
  d.shape = {n, 0};
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.values[i] = dj_formula(name, double(i) / double(n));
  const double ms = norm2_sq(d.values) / double(n);
  if (ms <= 0.0) throw std::runtime_error("gen_test_signal: degenerate signal");
  const double s = 1.0 / std::sqrt(ms);
  for (double& v : d.values) v *= s;
  return d;
}

Dataset add_noise_at_snr(const Dataset& truth, double snr_db, std::uint64_t seed) {
  truth.validate();
  const double energy = norm2_sq(truth.values);
  if (energy <= 0.0) throw std::invalid_argument("add_noise_at_snr: zero-energy truth");
  const std::size_t n = truth.size();
  const double tau_inv = energy / (double(n) * std::pow(10.0, snr_db / 10.0));
  const double sigma = std::sqrt(tau_inv);
  Dataset out = truth;
  out.truth = truth.values;
  out.noise_sigma = sigma;
  Rng rng(seed);
  for (double& v : out.values) v += sigma * rng.normal();
  return out;
}

MetricsRow metrics(const Dataset& estimate, const Dataset& truth, double tau_inv,
                   std::size_t d) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("metrics: shape mismatch");
  if (tau_inv <= 0.0) throw std::invalid_argument("metrics: tau_inv must be positive");
  const std::size_t n = truth.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err += sqr(truth.values[i] - estimate.values[i]);
  MetricsRow m;
  m.rmse_scaled = std::sqrt(err / (tau_inv * double(n)));
  const double est_energy = norm2_sq(estimate.values);
  m.snr_hat_db = (err == 0.0) ? std::numeric_limits<double>::infinity()
                              : 10.0 * std::log10(est_energy / err);
  m.sparsity_fraction = double(d) / double(n);
  return m;
}

double tv_measure(const Dataset& image) {
  if (!image.is_2d()) throw std::invalid_argument("tv_measure: 2-D dataset required");
  const std::size_t rows = image.shape[0], cols = image.shape[1];
  auto at = [&](std::size_t r, std::size_t c) { return image.values[(r % rows) * cols + (c % cols)]; };
  double tv = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double dh = at(r, c + 1) - at(r, c);
      const double dv = at(r + 1, c) - at(r, c);
      tv += std::sqrt(dh * dh + dv * dv);
    }
  return tv;
}

Dataset read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw std::runtime_error(path + ": not a binary PGM (P5)");
  auto next_int = [&]() {
    // Skip whitespace and '#' comment lines between header fields.
    int c;
    while ((c = f.get()) != EOF) {
      if (c == '#') {
        while ((c = f.get()) != EOF && c != '\n') {}
      } else if (!std::isspace(c)) {
        f.unget();
        break;
      }
    }
    long v;
    f >> v;
    return v;
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw std::runtime_error(path + ": unsupported PGM header");
  f.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(std::size_t(w) * std::size_t(h));
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!f) throw std::runtime_error(path + ": truncated PGM raster");
  Dataset d;
  d.shape = {std::size_t(h), std::size_t(w)};
  d.values.assign(raw.begin(), raw.end());
  return d;
}

void write_pgm(const std::string& path, const Dataset& img) {
  if (!img.is_2d()) throw std::invalid_argument("write_pgm: 2-D dataset required");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "P5\n" << img.shape[1] << " " << img.shape[0] << "\n255\n";
  for (double v : img.values) {
    const int q = int(std::lround(std::clamp(v, 0.0, 255.0)));
    f.put(char(q));
  }
}

Dataset read_csv_signal(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  Dataset d;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    d.values.push_back(std::stod(line));
  }
  d.shape = {d.values.size(), 0};
  return d;
}

void write_csv_signal(const std::string& path, const Dataset& sig) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.precision(17);
  for (double v : sig.values) f << v << "\n";
}

}  // namespace mdl
