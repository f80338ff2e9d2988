#include "gtex/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

namespace gtex {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& window_weights() {
  static const std::array<double, kWindow> w = [] {
    std::array<double, kWindow> out{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      double d = i - kWindow / 2;
      out[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
  }();
  return w;
}

// Plane of doubles with valid-window filtering and its adjoint.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane filter_valid(const Plane& in) {
  const auto& g = window_weights();
  Plane rows(in.w - kWindow + 1, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * in(x + k, y);
      rows(x, y) = s;
    }
  }
  Plane out(rows.w, in.h - kWindow + 1);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * rows(x, y + k);
      out(x, y) = s;
    }
  }
  return out;
}

Plane filter_adjoint(const Plane& in, int w, int h) {
  const auto& g = window_weights();
  Plane cols(in.w, h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      for (int k = 0; k < kWindow; ++k) cols(x, y + k) += g[k] * in(x, y);
    }
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < cols.w; ++x) {
      for (int k = 0; k < kWindow; ++k) out(x + k, y) += g[k] * cols(x, y);
    }
  }
  return out;
}

Plane channel(const ImageRGBA& img, int c) {
  Plane p(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) p.v[i] = img.data[i * 4 + c];
  return p;
}

Plane product(const Plane& a, const Plane& b) {
  Plane p(a.w, a.h);
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = a.v[i] * b.v[i];
  return p;
}

void check_sizes(const ImageRGBA& a, const ImageRGBA& b) {
  if (!a.same_size(b)) {
    throw Error("image size mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

}  // namespace

double psnr(const ImageRGBA& a, const ImageRGBA& b) {
  check_sizes(a, b);
  double sum = 0.0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) {
      double d = a.data[p * 4 + c] - b.data[p * 4 + c];
      sum += d * d;
    }
  }
  if (a.pixel_count() == 0) return kPsnrCap;
  double mse = sum / (3.0 * static_cast<double>(a.pixel_count()));
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageRGBA& a, const ImageRGBA& b) { return ssim(a, b, nullptr); }

double ssim(const ImageRGBA& a, const ImageRGBA& b, ImageRGBA* grad_a) {
  check_sizes(a, b);
  if (a.width < kWindow || a.height < kWindow) {
    throw Error("SSIM needs images of at least 11x11 pixels");
  }
  const int w = a.width;
  const int h = a.height;
  if (grad_a) *grad_a = ImageRGBA(w, h);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    Plane x = channel(a, c);
    Plane y = channel(b, c);
    Plane mx = filter_valid(x);
    Plane my = filter_valid(y);
    Plane sxx = filter_valid(product(x, x));
    Plane syy = filter_valid(product(y, y));
    Plane sxy = filter_valid(product(x, y));
    const std::size_t n = mx.v.size();
    Plane ga(mx.w, mx.h), gb(mx.w, mx.h), gc(mx.w, mx.h);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double ux = mx.v[i], uy = my.v[i];
      double vx = sxx.v[i] - ux * ux;
      double vy = syy.v[i] - uy * uy;
      double cxy = sxy.v[i] - ux * uy;
      double n1 = 2.0 * ux * uy + kC1;
      double n2 = 2.0 * cxy + kC2;
      double d1 = ux * ux + uy * uy + kC1;
      double d2 = vx + vy + kC2;
      double s = n1 * n2 / (d1 * d2);
      sum += s;
      if (grad_a) {
        double ds_dmu = 2.0 * uy * n2 / (d1 * d2) - s * 2.0 * ux / d1;
        double ds_dvar = -s / d2;
        double ds_dcov = 2.0 * n1 / (d1 * d2);
        ga.v[i] = ds_dmu - 2.0 * ux * ds_dvar - uy * ds_dcov;
        gb.v[i] = ds_dvar;
        gc.v[i] = ds_dcov;
      }
    }
    total += sum / static_cast<double>(n);
    if (grad_a) {
      const double scale = 1.0 / (3.0 * static_cast<double>(n));
      Plane ta = filter_adjoint(ga, w, h);
      Plane tb = filter_adjoint(gb, w, h);
      Plane tc = filter_adjoint(gc, w, h);
      for (std::size_t p = 0; p < a.pixel_count(); ++p) {
        grad_a->data[p * 4 + c] = scale * (ta.v[p] + 2.0 * x.v[p] * tb.v[p] + y.v[p] * tc.v[p]);
      }
    }
  }
  return total / 3.0;
}

double iou(const ImageRGBA& a, const ImageRGBA& b, double threshold) {
  check_sizes(a, b);
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    bool ia = a.data[p * 4 + 3] >= threshold;
    bool ib = b.data[p * 4 + 3] >= threshold;
    inter += ia && ib;
    uni += ia || ib;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void MetricReport::add(MetricRow row) {
  frames.push_back(std::move(row));
  mean = MetricRow{"mean", 0.0, 0.0, 0.0};
  for (const auto& f : frames) {
    mean.psnr += f.psnr;
    mean.ssim += f.ssim;
    mean.iou += f.iou;
  }
  const double n = static_cast<double>(frames.size());
  mean.psnr /= n;
  mean.ssim /= n;
  mean.iou /= n;
}

std::string MetricReport::table() const {
  std::size_t width = 5;
  for (const auto& f : frames) width = std::max(width, f.name.size());
  std::string out;
  char buf[256];
  auto line = [&](const std::string& name, const std::string& p, const std::string& s,
                  const std::string& i) {
    std::snprintf(buf, sizeof(buf), "%-*s  %9s  %7s  %7s\n", static_cast<int>(width),
                  name.c_str(), p.c_str(), s.c_str(), i.c_str());
    out += buf;
  };
  auto num = [](double v, int digits) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.*f", digits, v);
    return std::string(b);
  };
  line("frame", "PSNR", "SSIM", "IoU");
  for (const auto& f : frames) line(f.name, num(f.psnr, 4), num(f.ssim, 4), num(f.iou, 4));
  if (!frames.empty()) line(mean.name, num(mean.psnr, 4), num(mean.ssim, 4), num(mean.iou, 4));
  return out;
}

MetricRow compare(const ImageRGBA& a, const ImageRGBA& b, const std::string& name,
                  double iou_threshold) {
  return MetricRow{name, psnr(a, b), ssim(a, b), iou(a, b, iou_threshold)};
}

MetricReport evaluate_directories(const std::filesystem::path& a, const std::filesystem::path& b,
                                  double iou_threshold) {
  namespace fs = std::filesystem;
  for (const auto& dir : {a, b}) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  }
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files[entry.path().filename().string()] = entry.path();
    }
  }
  if (files.empty()) throw Error("no PNG files in " + a.string());
  MetricReport report;
  for (const auto& [name, path] : files) {
    fs::path other = b / name;
    if (!fs::exists(other)) throw Error("missing counterpart for " + name + " in " + b.string());
    report.add(compare(read_png(path), read_png(other), name, iou_threshold));
  }
  return report;
}

}  // namespace gtex
