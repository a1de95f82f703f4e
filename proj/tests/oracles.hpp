#pragma once

// Brute-force reference implementations used only by tests. Each one follows
// the textbook definition directly and shares no code with the library path
// it checks.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mtr/core/image.hpp"

namespace oracle {

inline bool on_segment(double px, double py, const mtr::Point& a, const mtr::Point& b) {
  const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
  if (std::abs(cross) > 1e-9) return false;
  return px >= std::min(a.x, b.x) - 1e-9 && px <= std::max(a.x, b.x) + 1e-9 &&
         py >= std::min(a.y, b.y) - 1e-9 && py <= std::max(a.y, b.y) + 1e-9;
}

/// Even-odd crossing test, boundary counted as inside.
inline bool point_in_polygon(double px, double py, const std::vector<mtr::Point>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(px, py, poly[i], poly[(i + 1) % n])) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > py) != (b.y > py)) {
      const double x = (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
      if (px < x) inside = !inside;
    }
  }
  return inside;
}

inline mtr::MaskTensor rasterize(const std::vector<mtr::PolygonBox>& boxes, int h, int w) {
  mtr::MaskTensor m(h, w, 0.0f);
  for (const auto& box : boxes) {
    if (!box.kept) continue;
    std::vector<mtr::Point> poly;
    for (const auto& p : box.vertices) {
      poly.push_back({std::clamp(p.x, 0.0, double(w)), std::clamp(p.y, 0.0, double(h))});
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (point_in_polygon(x, y, poly)) m.at(y, x) = 1.0f;
      }
    }
  }
  return m;
}

/// Dilation by an arbitrary structuring element given as an offset predicate.
template <class Element>
mtr::MaskTensor dilate(const mtr::MaskTensor& m, int reach, Element inside) {
  mtr::MaskTensor out(m.height(), m.width(), 0.0f);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= m.height() || xx >= m.width()) continue;
          if (inside(dx, dy) && m.at(yy, xx) > 0.5f) out.at(y, x) = 1.0f;
        }
      }
    }
  }
  return out;
}

inline mtr::MaskTensor random_mask(int h, int w, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution on(density);
  mtr::MaskTensor m(h, w, 0.0f);
  for (auto& v : m.data()) v = on(rng) ? 1.0f : 0.0f;
  return m;
}

inline mtr::ImageTensor random_image(int h, int w, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  mtr::ImageTensor img(h, w, c);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

/// SSIM computed window by window from the definition: Gaussian-weighted
/// moments of each 11x11 patch, no separable filtering.
inline double ssim_direct(const mtr::ImageTensor& a, const mtr::ImageTensor& b, int win = 11,
                          double sigma = 1.5) {
  std::vector<std::vector<double>> g(win, std::vector<double>(win));
  double total = 0;
  const double c = (win - 1) / 2.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      g[i][j] = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2 * sigma * sigma));
      total += g[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum_channels = 0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    double sum = 0;
    int count = 0;
    for (int y = 0; y + win <= a.height(); ++y) {
      for (int x = 0; x + win <= a.width(); ++x) {
        double mx = 0, my = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double wgt = g[i][j] / total;
            mx += wgt * a.at(y + i, x + j, ch);
            my += wgt * b.at(y + i, x + j, ch);
          }
        double vx = 0, vy = 0, cov = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double wgt = g[i][j] / total;
            const double dx = a.at(y + i, x + j, ch) - mx;
            const double dy = b.at(y + i, x + j, ch) - my;
            vx += wgt * dx * dx;
            vy += wgt * dy * dy;
            cov += wgt * dx * dy;
          }
        sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
    sum_channels += sum / count;
  }
  return sum_channels / a.channels();
}

}  // namespace oracle
