#include "boxmap/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "boxmap/error.hpp"
#include "boxmap/serialize.hpp"

namespace boxmap {

namespace {

// Summed-area table with a zero first row and column.
std::vector<double> integral(int w, int h, const std::vector<double>& v) {
  std::vector<double> s(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += v[static_cast<std::size_t>(y) * w + x];
      s[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] = s[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return s;
}

double box_sum(const std::vector<double>& s, int w, int x, int y, int n) {
  const auto at = [&](int xx, int yy) { return s[static_cast<std::size_t>(yy) * (w + 1) + xx]; };
  return at(x + n, y + n) - at(x, y + n) - at(x + n, y) + at(x, y);
}

}  // namespace

double ssim(const TsdfGrid& a, const TsdfGrid& b, const SsimConfig& cfg) {
  if (a.width() != b.width() || a.height() != b.height()) throw GeometryMismatch("ssim grids differ in size");
  const int w = a.width();
  const int h = a.height();
  const int n = cfg.window;
  if (n < 1 || w < n || h < n) throw std::invalid_argument("ssim window larger than the grid");
  const double range = cfg.dynamic_range > 0.0 ? cfg.dynamic_range : 2.0 * a.gamma();
  const double c1 = (cfg.k1 * range) * (cfg.k1 * range);
  const double c2 = (cfg.k2 * range) * (cfg.k2 * range);

  std::vector<double> va(a.values().begin(), a.values().end());
  std::vector<double> vb(b.values().begin(), b.values().end());
  std::vector<double> aa(va.size()), bb(va.size()), ab(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto sa = integral(w, h, va), sb = integral(w, h, vb);
  const auto saa = integral(w, h, aa), sbb = integral(w, h, bb), sab = integral(w, h, ab);
  const double inv = 1.0 / (static_cast<double>(n) * n);
  double total = 0.0;
  for (int y = 0; y + n <= h; ++y) {
    for (int x = 0; x + n <= w; ++x) {
      const double ma = box_sum(sa, w, x, y, n) * inv;
      const double mb = box_sum(sb, w, x, y, n) * inv;
      const double vara = std::max(0.0, box_sum(saa, w, x, y, n) * inv - ma * ma);
      const double varb = std::max(0.0, box_sum(sbb, w, x, y, n) * inv - mb * mb);
      const double cov = box_sum(sab, w, x, y, n) * inv - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (vara + varb + c2));
    }
  }
  return total / (static_cast<double>(w - n + 1) * (h - n + 1));
}

Region building_region(const OccupancyGrid& truth, int margin) {
  Region r{truth.width(), truth.height(), -1, -1};
  for (int y = 0; y < truth.height(); ++y) {
    for (int x = 0; x < truth.width(); ++x) {
      if (truth.at(x, y) != Cell::kFree) continue;
      r.x0 = std::min(r.x0, x);
      r.y0 = std::min(r.y0, y);
      r.x1 = std::max(r.x1, x);
      r.y1 = std::max(r.y1, y);
    }
  }
  if (r.x1 < 0) return Region{0, 0, truth.width() - 1, truth.height() - 1};
  r.x0 = std::max(0, r.x0 - margin);
  r.y0 = std::max(0, r.y0 - margin);
  r.x1 = std::min(truth.width() - 1, r.x1 + margin);
  r.y1 = std::min(truth.height() - 1, r.y1 + margin);
  return r;
}

TsdfGrid crop_region(const TsdfGrid& t, const Region& r) {
  TsdfGrid out(r.width(), r.height(), t.gamma());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) out.set(x, y, t.at(r.x0 + x, r.y0 + y));
  }
  return out;
}

double hamming(const OccupancyGrid& final_map, const OccupancyGrid& truth) {
  if (final_map.width() != truth.width() || final_map.height() != truth.height()) {
    throw GeometryMismatch("hamming grids differ in size");
  }
  std::size_t counted = 0, wrong = 0;
  for (int y = 0; y < truth.height(); ++y) {
    for (int x = 0; x < truth.width(); ++x) {
      const Cell t = truth.at(x, y);
      if (t == Cell::kUnknown) continue;
      if (t == Cell::kOccupied) {
        bool near_free = false;
        for (int dy = -1; dy <= 1 && !near_free; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (truth.contains(x + dx, y + dy) && truth.at(x + dx, y + dy) == Cell::kFree) {
              near_free = true;
              break;
            }
          }
        }
        if (!near_free) continue;
      }
      ++counted;
      if (final_map.at(x, y) != t) ++wrong;
    }
  }
  return counted == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(counted);
}

std::size_t map_memory(const BoxSet& boxes, const TopoGraph& topo) {
  return dump_compact(box_map_json(boxes, topo)).size();
}

std::size_t map_memory(const OccupancyGrid& grid) { return grid.geometry().size(); }

EpisodeMetrics evaluate(const EpisodeResult& r, const Floorplan& fp, double gamma) {
  EpisodeMetrics m;
  m.steps = r.steps;
  m.updates = r.updates;
  const OccupancyGrid& truth = fp.world;
  const Region region = building_region(truth, static_cast<int>(gamma));
  const TsdfGrid truth_tsdf = crop_region(chamfer_tsdf(truth, gamma), region);
  OccupancyGrid final_grid;
  if (uses_boxes(r.strategy)) {
    final_grid = rasterize(r.final_boxes, truth.geometry(), Cell::kOccupied);
    m.memory_bytes = map_memory(r.final_boxes, r.final_topo);
    m.hamming = hamming(final_grid, truth);
  } else {
    m.memory_bytes = map_memory(r.final_map);
    m.hamming = hamming(r.final_map, truth);
    final_grid = r.final_map;
    for (int y = 0; y < final_grid.height(); ++y) {
      for (int x = 0; x < final_grid.width(); ++x) {
        if (final_grid.at(x, y) == Cell::kUnknown) final_grid.set(x, y, Cell::kOccupied);
      }
    }
  }
  m.ssim = ssim(crop_region(chamfer_tsdf(final_grid, gamma), region), truth_tsdf);
  return m;
}

}  // namespace boxmap
