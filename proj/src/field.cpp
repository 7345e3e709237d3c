#include "kg/field.hpp"

#include <fftw3.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>

#include "json.hpp"

namespace kg {

double SpectralField::l2() const {
  double s = 0;
  for (const cplx& v : values) s += std::norm(v);
  return std::sqrt(s / (box_length * box_length * box_length));
}

double SpectralField::fourier_l1() const {
  double s = 0;
  for (const cplx& v : values) s += std::abs(v);
  double h = freq_step();
  return s * h * h * h;
}

double SpectralField::max_abs() const {
  double m = 0;
  for (const cplx& v : values) m = std::max(m, std::abs(v));
  return m;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  for (size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}
SpectralField& SpectralField::operator-=(const SpectralField& o) {
  for (size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}
SpectralField& SpectralField::operator*=(double s) {
  for (cplx& v : values) v *= s;
  return *this;
}

namespace {
// One cached in-place c2c plan pair per resolution.
struct PlanPair {
  fftw_plan fwd = nullptr, bwd = nullptr;
  fftw_complex* buf = nullptr;
  size_t sz = 0;
};
std::map<int, PlanPair>& plan_cache() {
  static std::map<int, PlanPair> c;
  return c;
}
std::mutex plan_mutex;

PlanPair& plans_for(int n) {
  std::lock_guard<std::mutex> lk(plan_mutex);
  auto& c = plan_cache();
  auto it = c.find(n);
  if (it != c.end()) return it->second;
  PlanPair p;
  p.sz = size_t(n) * n * n;
  p.buf = fftw_alloc_complex(p.sz);
  p.fwd = fftw_plan_dft_3d(n, n, n, p.buf, p.buf, FFTW_FORWARD, FFTW_MEASURE);
  p.bwd = fftw_plan_dft_3d(n, n, n, p.buf, p.buf, FFTW_BACKWARD, FFTW_MEASURE);
  return c.emplace(n, p).first->second;
}
}  // namespace

void fft3_inplace(std::vector<cplx>& data, int n, int sign) {
  PlanPair& p = plans_for(n);
  std::memcpy(p.buf, data.data(), p.sz * sizeof(fftw_complex));
  fftw_execute(sign < 0 ? p.fwd : p.bwd);
  std::memcpy(data.data(), p.buf, p.sz * sizeof(fftw_complex));
}

std::vector<cplx> to_physical(const SpectralField& f) {
  std::vector<cplx> out = f.values;
  fft3_inplace(out, f.resolution, +1);
  double L3 = f.box_length * f.box_length * f.box_length;
  for (cplx& v : out) v /= L3;
  return out;
}

SpectralField from_physical(const std::vector<cplx>& phys, int n, double L, int comp) {
  SpectralField f(n, L, comp);
  f.values = phys;
  fft3_inplace(f.values, n, -1);
  double s = L * L * L / (double(n) * n * n);
  for (cplx& v : f.values) v *= s;
  return f;
}

double sup_norm_padded(const SpectralField& f, int pad_factor) {
  if (pad_factor <= 1) {
    auto phys = to_physical(f);
    double m = 0;
    for (const cplx& v : phys) m = std::max(m, std::abs(v));
    return m;
  }
  const int n = f.resolution, N = n * pad_factor;
  std::vector<cplx> big(size_t(N) * N * N, cplx(0, 0));
  auto big_idx = [N](int i, int j, int k) { return (size_t(i) * N + j) * N + k; };
  auto wrap = [N](int m) { return m >= 0 ? m : m + N; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int mi = i < (n + 1) / 2 ? i : i - n;
        int mj = j < (n + 1) / 2 ? j : j - n;
        int mk = k < (n + 1) / 2 ? k : k - n;
        big[big_idx(wrap(mi), wrap(mj), wrap(mk))] = f.values[f.idx(i, j, k)];
      }
  fft3_inplace(big, N, +1);
  double L3 = f.box_length * f.box_length * f.box_length;
  double m = 0;
  for (const cplx& v : big) m = std::max(m, std::abs(v));
  return m / L3;
}

double boundary_mass_fraction(const SpectralField& f, double frac) {
  auto phys = to_physical(f);
  const int n = f.resolution;
  double edge = frac * f.box_length / 2.0;
  double total = 0, outer = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double w = std::norm(phys[f.idx(i, j, k)]);
        total += w;
        double m = std::max({std::fabs(f.coord_of(i)), std::fabs(f.coord_of(j)),
                             std::fabs(f.coord_of(k))});
        if (m > edge) outer += w;
      }
  return total > 0 ? outer / total : 0.0;
}

OffGridEvaluator::OffGridEvaluator(const SpectralField& f, double prune_tol) {
  auto phys = to_physical(f);
  const int n = f.resolution;
  double mx = 0;
  for (const cplx& v : phys) mx = std::max(mx, std::abs(v));
  double cut = mx * prune_tol;
  double cell = std::pow(f.box_length / n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const cplx& v = phys[f.idx(i, j, k)];
        if (std::abs(v) > cut)
          pts_.push_back({f.coord_of(i), f.coord_of(j), f.coord_of(k), v * cell});
      }
}

cplx OffGridEvaluator::operator()(const std::array<double, 3>& xi) const {
  cplx s(0, 0);
  for (const Pt& p : pts_) {
    double ph = -(xi[0] * p.x + xi[1] * p.y + xi[2] * p.z);
    s += p.w * cplx(std::cos(ph), std::sin(ph));
  }
  return s;
}

void dump_field(const SpectralField& f, const std::string& path_base) {
  std::ofstream bin(path_base + ".bin", std::ios::binary);
  if (!bin) throw numeric_error("dump_field: cannot open " + path_base + ".bin");
  for (const cplx& v : f.values) {
    double re = v.real(), im = v.imag();
    bin.write(reinterpret_cast<const char*>(&re), 8);
    bin.write(reinterpret_cast<const char*>(&im), 8);
  }
  nlohmann::json side = {{"component", f.component},
                         {"box_length", f.box_length},
                         {"resolution", f.resolution},
                         {"tag", f.tag}};
  std::ofstream js(path_base + ".json");
  js << side.dump(2) << "\n";
}

SpectralField load_field(const std::string& path_base) {
  std::ifstream js(path_base + ".json");
  if (!js) throw numeric_error("load_field: missing sidecar " + path_base + ".json");
  nlohmann::json side;
  js >> side;
  SpectralField f(side.at("resolution").get<int>(), side.at("box_length").get<double>(),
                  side.at("component").get<int>());
  f.tag = side.value("tag", "");
  std::ifstream bin(path_base + ".bin", std::ios::binary);
  if (!bin) throw numeric_error("load_field: missing data " + path_base + ".bin");
  for (cplx& v : f.values) {
    double re, im;
    bin.read(reinterpret_cast<char*>(&re), 8);
    bin.read(reinterpret_cast<char*>(&im), 8);
    v = cplx(re, im);
  }
  if (!bin) throw numeric_error("load_field: truncated data file");
  return f;
}

}  // namespace kg
