#ifndef RKBS_LOSSES_HPP
#define RKBS_LOSSES_HPP

#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rkbs {

// Interval on the margin axis u = y * t.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double u) const {
    return (u > lo || (lo_closed && u == lo)) && (u < hi || (hi_closed && u == hi));
  }
};

// a*u + b
struct Affine {
  double a = 0.0;
  double b = 0.0;
};

// q*u^2 + a*u + b
struct Quadratic {
  double q = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// ln(a - u) + b, defined for u < a
struct Logarithmic {
  double a = 0.0;
  double b = 0.0;
};

using PieceForm = std::variant<Affine, Quadratic, Logarithmic>;

struct LossPiece {
  Interval on;
  PieceForm form;
};

// Declared, not verified.
struct LossProperties {
  bool lower_semi_continuous = true;
  bool continuous_at_zero = true;
  bool zero_not_stationary = true;
};

/// A piecewise loss of the margin u = y * t. Pieces are sorted, contiguous,
/// and cover the real line; each breakpoint belongs to exactly one piece.
class LossSpec {
 public:
  LossSpec(std::string name, std::vector<LossPiece> pieces, LossProperties properties = {});

  // L1: 1 - u for u < 1, else 0.
  static LossSpec hinge();
  // L2: (1 - u)^2 for u < 1, else 0.
  static LossSpec squared_hinge();
  // L3: ln(2 - u) for u < 1, else 0.
  static LossSpec log_piecewise();
  // L4: 2 - u for u < 0, 2 - 2u for 0 <= u < 1, else 0.
  static LossSpec ramp2();

  // "hinge", "squared-hinge", "log-piecewise", "ramp2"; throws ConfigError.
  static LossSpec by_name(const std::string& name);
  static const std::vector<std::string>& builtin_names();

  // {"name": ..., "pieces": [{"lo": x|null, "hi": x|null, "lo_closed": bool,
  //   "hi_closed": bool, "type": "affine"|"quadratic"|"logarithmic", ...}]}
  // Unknown piece types raise UnsupportedPiece; a broken partition or a
  // negative value raises ConfigError.
  static LossSpec from_json(const nlohmann::json& j);

  const std::string& name() const { return name_; }
  const std::vector<LossPiece>& pieces() const { return pieces_; }
  const LossProperties& properties() const { return properties_; }

  const LossPiece& piece_at(double u) const;
  double margin_value(double u) const;

 private:
  std::string name_;
  std::vector<LossPiece> pieces_;
  LossProperties properties_;
};

double evaluate_piece(const PieceForm& form, double u);

double loss_eval(const LossSpec& loss, int y, double t);

// L(y, alpha) / N + (beta / 2) (alpha - e)^2
double prox_objective(const LossSpec& loss, int y, double e, double beta, int N, double alpha);

/// Global minimizer of prox_objective by candidate enumeration: stationary
/// points of every piece clipped to its interval, plus every breakpoint.
/// Ties go to the candidate nearest e, then to the smaller alpha.
double prox_step(const LossSpec& loss, int y, double e, double beta, int N);

/// Brute-force reference: grid search over [lo, hi] followed by a
/// golden-section refinement inside the pieces around the best grid point.
/// Requires [lo, hi] to contain [min(e, -3) - 2, max(e, 3) + 2].
double prox_oracle_grid(const LossSpec& loss, int y, double e, double beta, int N, double lo, double hi,
                        double step);

}  // namespace rkbs

#endif  // RKBS_LOSSES_HPP
