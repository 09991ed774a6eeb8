#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boxmap/boxes.hpp"
#include "boxmap/grid.hpp"

namespace boxmap {

/// Boolean pixel mask sharing the geometry of a TsdfGrid.
class WallMask {
 public:
  WallMask() = default;
  WallMask(int width, int height) : width_(width), height_(height), bits_(std::size_t(width) * height, 0) {}

  /// Ground-truth wall region: cells with |tsdf| < level.
  static WallMask from_tsdf(const TsdfGrid& tsdf, double level = 0.5);
  /// OCCUPIED cells of an occupancy grid.
  static WallMask from_occupancy(const OccupancyGrid& grid);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[std::size_t(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[std::size_t(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct RoomGrad {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0, q = 0.0;
};

struct DoorGrad {
  double cx = 0.0, cy = 0.0, s = 0.0, q = 0.0;
};

/// Partial derivatives with respect to every box parameter and gate.
struct Gradient {
  std::vector<RoomGrad> rooms;
  std::vector<DoorGrad> doors;

  static Gradient zeros(const BoxSet& shape);
  Gradient& operator+=(const Gradient& other);
  double max_abs() const;
};

/// Flat parameter vector: (x0, y0, x1, y1, q) per room, then (cx, cy, s, q) per door.
std::vector<double> pack(const BoxSet& boxes);
std::vector<double> pack(const Gradient& grad);
BoxSet unpack(const BoxSet& shape, std::span<const double> params);
std::string parameter_name(const BoxSet& shape, std::size_t index);

struct LossValue {
  double value = 0.0;
  Gradient grad;
};

struct LossConfig {
  double wall_band = 1.0;  // |rooms composite| <= band joins the door mask
};

LossValue loss_tsdf(const BoxSet& pred, const TsdfGrid& truth);
LossValue loss_tsdf_wall(const BoxSet& pred, const TsdfGrid& truth, const WallMask& walls);
/// Door loss over the mask {|rooms composite| <= wall_band} | input_walls.
LossValue loss_door(const BoxSet& pred, const TsdfGrid& truth, const WallMask& input_walls,
                    const LossConfig& cfg = {});
/// Mean IoU over ordered pairs of distinct active rooms.
LossValue loss_iou(const BoxSet& pred);

struct GateLoss {
  double value = 0.0;
  std::vector<double> grad;
};

/// (1/|Q|) * (sum q(1-q) + sum q).
GateLoss loss_gate(std::span<const double> gates);
/// Gate loss over the room gates of `pred`.
LossValue loss_gate(const BoxSet& pred);

/// Door prediction at p: max(0, max_j q_j * (diamond_j(p) + gamma) - gamma).
double door_prediction(const BoxSet& pred, Point2 p, double gamma);

struct LossTerms {
  bool tsdf = true;
  bool tsdf_wall = true;
  bool door = true;
  bool iou = true;
  bool gate = true;
};

struct LossReport {
  double l_tsdf = 0.0;
  double l_tsdf_wall = 0.0;
  double l_door = 0.0;
  double l_iou = 0.0;
  double l_gate = 0.0;
  double total = 0.0;
  Gradient gradient;
};

/// Sum of the enabled components and of their gradients.
LossReport loss_total(const BoxSet& pred, const TsdfGrid& truth, const WallMask& walls,
                      const LossConfig& cfg = {}, const LossTerms& terms = {});

enum class LossComponent { kTsdf, kTsdfWall, kDoor, kIou, kGate, kTotal };

const char* to_string(LossComponent c);

struct ParameterCheck {
  std::size_t index = 0;
  std::string name;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool skipped = false;  // a kink lies within 10h along this coordinate
};

struct GradientCheckReport {
  LossComponent component = LossComponent::kTotal;
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped = 0;
  bool passed = false;
  std::vector<ParameterCheck> parameters;
};

/// Central finite differences against the analytic gradient. A coordinate is
/// skipped when the piece selection of any min/max/ReLU/mask changes within
/// +-10h of the current value. The relative error is
/// |a - n| / max(|a|, |n|, 1e-4).
GradientCheckReport check_gradients(const BoxSet& pred, const TsdfGrid& truth,
                                    const WallMask& walls, LossComponent component,
                                    double h = 1e-4, double tol = 1e-6,
                                    const LossConfig& cfg = {});

}  // namespace boxmap
