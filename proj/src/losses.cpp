#include "boxmap/losses.hpp"

#include <algorithm>
#include <cmath>

#include "boxmap/error.hpp"

namespace boxmap {

// ---------------------------------------------------------------------------
// Masks and gradient containers

WallMask WallMask::from_tsdf(const TsdfGrid& tsdf, double level) {
  WallMask m(tsdf.width(), tsdf.height());
  for (int y = 0; y < tsdf.height(); ++y) {
    for (int x = 0; x < tsdf.width(); ++x) m.set(x, y, std::abs(tsdf.at(x, y)) < level);
  }
  return m;
}

WallMask WallMask::from_occupancy(const OccupancyGrid& grid) {
  WallMask m(grid.width(), grid.height());
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) m.set(x, y, grid.at(x, y) == Cell::kOccupied);
  }
  return m;
}

std::size_t WallMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Gradient Gradient::zeros(const BoxSet& shape) {
  Gradient g;
  g.rooms.resize(shape.rooms.size());
  g.doors.resize(shape.doors.size());
  return g;
}

Gradient& Gradient::operator+=(const Gradient& o) {
  for (std::size_t i = 0; i < rooms.size() && i < o.rooms.size(); ++i) {
    rooms[i].x0 += o.rooms[i].x0;
    rooms[i].y0 += o.rooms[i].y0;
    rooms[i].x1 += o.rooms[i].x1;
    rooms[i].y1 += o.rooms[i].y1;
    rooms[i].q += o.rooms[i].q;
  }
  for (std::size_t i = 0; i < doors.size() && i < o.doors.size(); ++i) {
    doors[i].cx += o.doors[i].cx;
    doors[i].cy += o.doors[i].cy;
    doors[i].s += o.doors[i].s;
    doors[i].q += o.doors[i].q;
  }
  return *this;
}

std::vector<double> pack(const BoxSet& b) {
  std::vector<double> p;
  p.reserve(b.rooms.size() * 5 + b.doors.size() * 4);
  for (const RoomBox& r : b.rooms) p.insert(p.end(), {r.x0, r.y0, r.x1, r.y1, r.q});
  for (const DoorBox& d : b.doors) p.insert(p.end(), {d.center.x, d.center.y, d.size, d.q});
  return p;
}

std::vector<double> pack(const Gradient& g) {
  std::vector<double> p;
  p.reserve(g.rooms.size() * 5 + g.doors.size() * 4);
  for (const RoomGrad& r : g.rooms) p.insert(p.end(), {r.x0, r.y0, r.x1, r.y1, r.q});
  for (const DoorGrad& d : g.doors) p.insert(p.end(), {d.cx, d.cy, d.s, d.q});
  return p;
}

double Gradient::max_abs() const {
  double m = 0.0;
  for (double v : pack(*this)) m = std::max(m, std::abs(v));
  return m;
}

BoxSet unpack(const BoxSet& shape, std::span<const double> p) {
  if (p.size() != shape.rooms.size() * 5 + shape.doors.size() * 4) {
    throw Error("unpack: parameter count does not match the box set");
  }
  BoxSet out = shape;
  std::size_t k = 0;
  for (RoomBox& r : out.rooms) {
    r.x0 = p[k++];
    r.y0 = p[k++];
    r.x1 = p[k++];
    r.y1 = p[k++];
    r.q = p[k++];
  }
  for (DoorBox& d : out.doors) {
    d.center.x = p[k++];
    d.center.y = p[k++];
    d.size = p[k++];
    d.q = p[k++];
  }
  return out;
}

std::string parameter_name(const BoxSet& shape, std::size_t index) {
  static const char* kRoom[] = {"x0", "y0", "x1", "y1", "q"};
  static const char* kDoor[] = {"cx", "cy", "s", "q"};
  const std::size_t room_params = shape.rooms.size() * 5;
  if (index < room_params) {
    return "room[" + std::to_string(index / 5) + "]." + kRoom[index % 5];
  }
  index -= room_params;
  return "door[" + std::to_string(index / 4) + "]." + kDoor[index % 4];
}

// ---------------------------------------------------------------------------
// Piecewise evaluation with subgradients. Ties take the first-listed argument
// of every min/max; ReLU(0) has slope 0. When `pattern` is non-null every
// piece selection is appended so callers can detect kinks.

namespace {

using Pattern = std::vector<std::uint32_t>;

struct AxisEval {
  double value;
  double d_lo;  // d/d(x0)
  double d_hi;  // d/d(x1)
  std::uint32_t bits;
};

AxisEval f1d_eval(double x, double x0, double x1, double gamma) {
  const double a1 = x - x0 + gamma;
  const double a2 = x - x0 - gamma;
  const double b1 = x - x1 + gamma;
  const double b2 = x - x1 - gamma;
  const double rising = relu(a1) - relu(a2) - gamma;
  const double falling = -relu(b1) + relu(b2) + gamma;
  const std::uint32_t bits = (a1 > 0) | (a2 > 0) << 1 | (b1 > 0) << 2 | (b2 > 0) << 3 |
                             (rising <= falling) << 4;
  if (rising <= falling) {
    return {rising, -double(a1 > 0) + double(a2 > 0), 0.0, bits};
  }
  return {falling, 0.0, double(b1 > 0) - double(b2 > 0), bits};
}

struct CompositeEval {
  double value = 0.0;
  int argmax = -1;
  RoomGrad d;  // partials of the composite w.r.t. the argmax room
  std::uint32_t bits = 0;
};

CompositeEval composite_eval(const BoxSet& boxes, Point2 p, double gamma) {
  CompositeEval out;
  out.value = -gamma;
  for (std::size_t i = 0; i < boxes.rooms.size(); ++i) {
    const RoomBox& b = boxes.rooms[i];
    const AxisEval fx = f1d_eval(p.x, b.x0, b.x1, gamma);
    const AxisEval fy = f1d_eval(p.y, b.y0, b.y1, gamma);
    const bool use_x = fx.value <= fy.value;
    const double f = use_x ? fx.value : fy.value;
    const double g = b.q * (f + gamma) - gamma;
    if (out.argmax < 0 || g > out.value) {
      out.value = g;
      out.argmax = static_cast<int>(i);
      out.d = {};
      if (use_x) {
        out.d.x0 = b.q * fx.d_lo;
        out.d.x1 = b.q * fx.d_hi;
      } else {
        out.d.y0 = b.q * fy.d_lo;
        out.d.y1 = b.q * fy.d_hi;
      }
      out.d.q = f + gamma;
      out.bits = fx.bits | fy.bits << 5 | std::uint32_t(use_x) << 10;
    }
  }
  return out;
}

struct DoorEval {
  double value = 0.0;  // max(0, gated diamonds)
  int argmax = -1;
  DoorGrad d;
  std::uint32_t bits = 0;
};

DoorEval door_eval(const BoxSet& boxes, Point2 p, double gamma) {
  DoorEval out;
  for (std::size_t j = 0; j < boxes.doors.size(); ++j) {
    const DoorBox& door = boxes.doors[j];
    const double ux = p.x - door.center.x;
    const double uy = p.y - door.center.y;
    const double t = door.size / 2.0 - std::abs(ux) - std::abs(uy);
    const double dia = relu(t);
    const double g = door.q * (dia + gamma) - gamma;
    if (g > out.value) {
      out.value = g;
      out.argmax = static_cast<int>(j);
      const double active = t > 0 ? 1.0 : 0.0;
      // d|u|/du = +1 at u = 0 (first argument of max(u, -u)).
      const double sx = ux >= 0 ? 1.0 : -1.0;
      const double sy = uy >= 0 ? 1.0 : -1.0;
      out.d = {door.q * active * sx, door.q * active * sy, door.q * active * 0.5, dia + gamma};
      out.bits = std::uint32_t(t > 0) | std::uint32_t(ux >= 0) << 1 | std::uint32_t(uy >= 0) << 2;
    }
  }
  return out;
}

void add_scaled(RoomGrad& acc, const RoomGrad& d, double s) {
  acc.x0 += s * d.x0;
  acc.y0 += s * d.y0;
  acc.x1 += s * d.x1;
  acc.y1 += s * d.y1;
  acc.q += s * d.q;
}

void add_scaled(DoorGrad& acc, const DoorGrad& d, double s) {
  acc.cx += s * d.cx;
  acc.cy += s * d.cy;
  acc.s += s * d.s;
  acc.q += s * d.q;
}

struct MapTerms {
  LossValue tsdf;
  LossValue wall;
  LossValue door;
};

// One sweep over all pixels for the three map-based losses.
MapTerms map_losses(const BoxSet& pred, const TsdfGrid& truth, const WallMask* walls,
                    const LossConfig& cfg, const LossTerms& terms, Pattern* pattern) {
  if (walls != nullptr && (walls->width() != truth.width() || walls->height() != truth.height())) {
    throw GeometryMismatch("wall mask and truth differ in size");
  }
  const double gamma = truth.gamma();
  const double inv_p = 1.0 / static_cast<double>(truth.size());
  MapTerms out{{0.0, Gradient::zeros(pred)}, {0.0, Gradient::zeros(pred)},
               {0.0, Gradient::zeros(pred)}};
  for (int y = 0; y < truth.height(); ++y) {
    double row_tsdf = 0.0;
    double row_wall = 0.0;
    double row_door = 0.0;
    for (int x = 0; x < truth.width(); ++x) {
      const Point2 p{double(x), double(y)};
      const CompositeEval c = composite_eval(pred, p, gamma);
      const double residual = truth.at(x, y) - c.value;
      const bool on_wall = walls != nullptr && walls->at(x, y);
      if (pattern) pattern->push_back(std::uint32_t(c.argmax + 1) << 16 | c.bits);
      if (terms.tsdf) {
        row_tsdf += residual * residual;
        if (c.argmax >= 0) add_scaled(out.tsdf.grad.rooms[c.argmax], c.d, -2.0 * residual * inv_p);
      }
      if (terms.tsdf_wall && on_wall) {
        row_wall += residual * residual;
        if (c.argmax >= 0) add_scaled(out.wall.grad.rooms[c.argmax], c.d, -2.0 * residual * inv_p);
      }
      if (terms.door) {
        const bool in_mask = std::abs(c.value) <= cfg.wall_band || on_wall;
        if (pattern) pattern->push_back(std::uint32_t(in_mask));
        if (!in_mask) continue;
        const DoorEval d = door_eval(pred, p, gamma);
        if (pattern) pattern->push_back(std::uint32_t(d.argmax + 1) << 16 | d.bits);
        const double r = residual - d.value;
        row_door += r * r;
        if (c.argmax >= 0) add_scaled(out.door.grad.rooms[c.argmax], c.d, -2.0 * r * inv_p);
        if (d.argmax >= 0) add_scaled(out.door.grad.doors[d.argmax], d.d, -2.0 * r * inv_p);
      }
    }
    out.tsdf.value += row_tsdf;
    out.wall.value += row_wall;
    out.door.value += row_door;
  }
  out.tsdf.value *= inv_p;
  out.wall.value *= inv_p;
  out.door.value *= inv_p;
  return out;
}

struct SpanEval {
  double len;
  double d_a0, d_a1, d_b0, d_b1;
  std::uint32_t bits;
};

// min(a1, b1) - max(a0, b0)
SpanEval span_eval(double a0, double a1, double b0, double b1) {
  const bool hi_a = a1 <= b1;
  const bool lo_a = a0 >= b0;
  return {(hi_a ? a1 : b1) - (lo_a ? a0 : b0),
          lo_a ? -1.0 : 0.0,
          hi_a ? 1.0 : 0.0,
          lo_a ? 0.0 : -1.0,
          hi_a ? 0.0 : 1.0,
          std::uint32_t(hi_a) | std::uint32_t(lo_a) << 1};
}

LossValue iou_loss(const BoxSet& pred, Pattern* pattern) {
  LossValue out{0.0, Gradient::zeros(pred)};
  std::vector<int> active;
  for (std::size_t i = 0; i < pred.rooms.size(); ++i) {
    const bool a = pred.rooms[i].active();
    if (pattern) pattern->push_back(a);
    if (a) active.push_back(static_cast<int>(i));
  }
  const double k = static_cast<double>(active.size());
  if (active.size() < 2) return out;
  // Each unordered pair appears twice among the ordered pairs.
  const double scale = 2.0 / (k * (k - 1.0));
  for (std::size_t u = 0; u < active.size(); ++u) {
    for (std::size_t v = u + 1; v < active.size(); ++v) {
      const RoomBox& a = pred.rooms[active[u]];
      const RoomBox& b = pred.rooms[active[v]];
      const SpanEval w = span_eval(a.x0, a.x1, b.x0, b.x1);
      const SpanEval h = span_eval(a.y0, a.y1, b.y0, b.y1);
      const bool hit = w.len > 0.0 && h.len > 0.0;
      if (pattern) pattern->push_back(std::uint32_t(hit) | w.bits << 1 | h.bits << 3);
      if (!hit) continue;
      const double inter = w.len * h.len;
      const double uni = a.area() + b.area() - inter;
      if (uni <= 0.0) continue;
      out.value += scale * inter / uni;
      // dI and dU per parameter, a then b, ordered (x0, y0, x1, y1).
      const double dI[8] = {w.d_a0 * h.len, h.d_a0 * w.len, w.d_a1 * h.len, h.d_a1 * w.len,
                            w.d_b0 * h.len, h.d_b0 * w.len, w.d_b1 * h.len, h.d_b1 * w.len};
      const double dArea[8] = {-a.height(), -a.width(), a.height(), a.width(),
                               -b.height(), -b.width(), b.height(), b.width()};
      double g[8];
      for (int t = 0; t < 8; ++t) {
        const double dU = dArea[t] - dI[t];
        g[t] = scale * (dI[t] * uni - inter * dU) / (uni * uni);
      }
      RoomGrad& ga = out.grad.rooms[active[u]];
      RoomGrad& gb = out.grad.rooms[active[v]];
      ga.x0 += g[0];
      ga.y0 += g[1];
      ga.x1 += g[2];
      ga.y1 += g[3];
      gb.x0 += g[4];
      gb.y0 += g[5];
      gb.x1 += g[6];
      gb.y1 += g[7];
    }
  }
  return out;
}

LossReport total_impl(const BoxSet& pred, const TsdfGrid& truth, const WallMask& walls,
                      const LossConfig& cfg, const LossTerms& terms, Pattern* pattern) {
  LossReport r;
  r.gradient = Gradient::zeros(pred);
  if (terms.tsdf || terms.tsdf_wall || terms.door) {
    MapTerms m = map_losses(pred, truth, &walls, cfg, terms, pattern);
    if (terms.tsdf) {
      r.l_tsdf = m.tsdf.value;
      r.gradient += m.tsdf.grad;
    }
    if (terms.tsdf_wall) {
      r.l_tsdf_wall = m.wall.value;
      r.gradient += m.wall.grad;
    }
    if (terms.door) {
      r.l_door = m.door.value;
      r.gradient += m.door.grad;
    }
  }
  if (terms.iou) {
    LossValue v = iou_loss(pred, pattern);
    r.l_iou = v.value;
    r.gradient += v.grad;
  }
  if (terms.gate) {
    LossValue v = loss_gate(pred);
    r.l_gate = v.value;
    r.gradient += v.grad;
  }
  r.total = r.l_tsdf + r.l_tsdf_wall + r.l_door + r.l_iou + r.l_gate;
  return r;
}

LossTerms only(LossComponent c) {
  LossTerms t{false, false, false, false, false};
  switch (c) {
    case LossComponent::kTsdf: t.tsdf = true; break;
    case LossComponent::kTsdfWall: t.tsdf_wall = true; break;
    case LossComponent::kDoor: t.door = true; break;
    case LossComponent::kIou: t.iou = true; break;
    case LossComponent::kGate: t.gate = true; break;
    case LossComponent::kTotal: t = LossTerms{}; break;
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points

LossValue loss_tsdf(const BoxSet& pred, const TsdfGrid& truth) {
  LossTerms t{true, false, false, false, false};
  return std::move(map_losses(pred, truth, nullptr, {}, t, nullptr).tsdf);
}

LossValue loss_tsdf_wall(const BoxSet& pred, const TsdfGrid& truth, const WallMask& walls) {
  LossTerms t{false, true, false, false, false};
  return std::move(map_losses(pred, truth, &walls, {}, t, nullptr).wall);
}

LossValue loss_door(const BoxSet& pred, const TsdfGrid& truth, const WallMask& input_walls,
                    const LossConfig& cfg) {
  LossTerms t{false, false, true, false, false};
  return std::move(map_losses(pred, truth, &input_walls, cfg, t, nullptr).door);
}

LossValue loss_iou(const BoxSet& pred) { return iou_loss(pred, nullptr); }

GateLoss loss_gate(std::span<const double> gates) {
  GateLoss out;
  out.grad.assign(gates.size(), 0.0);
  if (gates.empty()) return out;
  const double inv = 1.0 / static_cast<double>(gates.size());
  double bimodal = 0.0;
  double sparsity = 0.0;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const double q = gates[i];
    bimodal += q * (1.0 - q);
    sparsity += q;
    out.grad[i] = (2.0 - 2.0 * q) * inv;
  }
  out.value = inv * (bimodal + sparsity);
  return out;
}

LossValue loss_gate(const BoxSet& pred) {
  std::vector<double> gates;
  for (const RoomBox& r : pred.rooms) gates.push_back(r.q);
  GateLoss g = loss_gate(gates);
  LossValue out{g.value, Gradient::zeros(pred)};
  for (std::size_t i = 0; i < gates.size(); ++i) out.grad.rooms[i].q = g.grad[i];
  return out;
}

double door_prediction(const BoxSet& pred, Point2 p, double gamma) {
  return door_eval(pred, p, gamma).value;
}

LossReport loss_total(const BoxSet& pred, const TsdfGrid& truth, const WallMask& walls,
                      const LossConfig& cfg, const LossTerms& terms) {
  return total_impl(pred, truth, walls, cfg, terms, nullptr);
}

const char* to_string(LossComponent c) {
  switch (c) {
    case LossComponent::kTsdf: return "tsdf";
    case LossComponent::kTsdfWall: return "tsdf_wall";
    case LossComponent::kDoor: return "door";
    case LossComponent::kIou: return "iou";
    case LossComponent::kGate: return "gate";
    case LossComponent::kTotal: return "total";
  }
  return "?";
}

GradientCheckReport check_gradients(const BoxSet& pred, const TsdfGrid& truth,
                                    const WallMask& walls, LossComponent component, double h,
                                    double tol, const LossConfig& cfg) {
  const LossTerms terms = only(component);
  GradientCheckReport report;
  report.component = component;
  const std::vector<double> theta = pack(pred);
  const std::vector<double> analytic =
      pack(total_impl(pred, truth, walls, cfg, terms, nullptr).gradient);

  auto value_at = [&](const std::vector<double>& params, Pattern* pattern) {
    return total_impl(unpack(pred, params), truth, walls, cfg, terms, pattern).total;
  };

  Pattern center_pattern;
  value_at(theta, &center_pattern);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    ParameterCheck pc;
    pc.index = k;
    pc.name = parameter_name(pred, k);
    pc.analytic = analytic[k];
    for (double t : {-10.0, -1.0, 1.0, 10.0}) {
      std::vector<double> probe = theta;
      probe[k] += t * h;
      Pattern p;
      value_at(probe, &p);
      if (p != center_pattern) {
        pc.skipped = true;
        break;
      }
    }
    if (pc.skipped) {
      ++report.skipped;
    } else {
      std::vector<double> plus = theta;
      std::vector<double> minus = theta;
      plus[k] += h;
      minus[k] -= h;
      pc.numeric = (value_at(plus, nullptr) - value_at(minus, nullptr)) / (2.0 * h);
      const double denom = std::max({std::abs(pc.analytic), std::abs(pc.numeric), 1e-4});
      pc.rel_error = std::abs(pc.analytic - pc.numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, pc.rel_error);
      ++report.checked;
    }
    report.parameters.push_back(std::move(pc));
  }
  report.passed = report.checked > 0 && report.max_rel_error <= tol;
  return report;
}

}  // namespace boxmap
