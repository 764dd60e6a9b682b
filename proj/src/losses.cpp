#include "rkbs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rkbs/error.hpp"

namespace rkbs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Stationary points of piece(u)/N + (beta/2)(u - ub)^2 on the whole line.
std::vector<double> stationary_points(const PieceForm& form, double ub, double beta, int N) {
  const double n = static_cast<double>(N);
  return std::visit(
      overloaded{
          [&](const Affine& p) -> std::vector<double> { return {ub - p.a / (beta * n)}; },
          [&](const Quadratic& p) -> std::vector<double> {
            const double curvature = 2.0 * p.q / n + beta;
            if (curvature <= 0.0) return {};
            return {(beta * ub - p.a / n) / curvature};
          },
          [&](const Logarithmic& p) -> std::vector<double> {
            // -1/(N (a - u)) + beta (u - ub) = 0  <=>  u^2 - (a + ub) u + a ub + 1/(beta N) = 0
            const double disc = (p.a - ub) * (p.a - ub) - 4.0 / (beta * n);
            if (disc < 0.0) return {};
            const double root = std::sqrt(disc);
            std::vector<double> out;
            for (double u : {0.5 * (p.a + ub - root), 0.5 * (p.a + ub + root)})
              if (p.a - u > 0.0) out.push_back(u);
            return out;
          },
      },
      form);
}

double clip(double u, const Interval& on) { return std::clamp(u, on.lo, on.hi); }

// Candidate comparison: objective, then distance to e, then value.
bool better(double f_new, double a_new, double f_best, double a_best, double e) {
  if (f_new != f_best) return f_new < f_best;
  const double d_new = std::abs(a_new - e);
  const double d_best = std::abs(a_best - e);
  if (d_new != d_best) return d_new < d_best;
  return a_new < a_best;
}

void validate_pieces(const std::string& name, const std::vector<LossPiece>& pieces) {
  auto fail = [&](const std::string& what) { throw ConfigError("loss '" + name + "': " + what); };
  if (pieces.empty()) fail("no pieces");
  if (pieces.front().on.lo != -kInf) fail("first piece must start at -inf");
  if (pieces.back().on.hi != kInf) fail("last piece must end at +inf");
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& on = pieces[k].on;
    if (!(on.lo < on.hi)) fail("piece intervals must be nonempty");
    if (k + 1 < pieces.size()) {
      const auto& next = pieces[k + 1].on;
      if (on.hi != next.lo) fail("pieces must be contiguous");
      if (on.hi_closed == next.lo_closed) fail("each breakpoint must belong to exactly one piece");
    }
    if (const auto* log = std::get_if<Logarithmic>(&pieces[k].form); log && !(on.hi < log->a))
      fail("logarithmic piece must end before its singularity");
  }
  // Nonnegativity on a sample: endpoints, quadratic vertices, far tails.
  for (const auto& piece : pieces) {
    std::vector<double> probes;
    const auto& on = piece.on;
    if (std::isfinite(on.lo)) probes.push_back(on.lo);
    if (std::isfinite(on.hi)) probes.push_back(on.hi);
    if (!std::isfinite(on.lo)) probes.push_back((std::isfinite(on.hi) ? on.hi : 0.0) - 1e6);
    if (!std::isfinite(on.hi)) probes.push_back((std::isfinite(on.lo) ? on.lo : 0.0) + 1e6);
    if (const auto* q = std::get_if<Quadratic>(&piece.form); q && q->q != 0.0)
      probes.push_back(clip(-q->a / (2.0 * q->q), on));
    for (double u : probes)
      if (evaluate_piece(piece.form, u) < -1e-12) fail("loss must be nonnegative");
  }
}

}  // namespace

LossSpec::LossSpec(std::string name, std::vector<LossPiece> pieces, LossProperties properties)
    : name_(std::move(name)), pieces_(std::move(pieces)), properties_(properties) {
  validate_pieces(name_, pieces_);
}

LossSpec LossSpec::hinge() {
  return LossSpec("hinge", {{{-kInf, 1.0, false, false}, Affine{-1.0, 1.0}},
                            {{1.0, kInf, true, false}, Affine{0.0, 0.0}}});
}

LossSpec LossSpec::squared_hinge() {
  return LossSpec("squared-hinge", {{{-kInf, 1.0, false, false}, Quadratic{1.0, -2.0, 1.0}},
                                    {{1.0, kInf, true, false}, Affine{0.0, 0.0}}});
}

LossSpec LossSpec::log_piecewise() {
  return LossSpec("log-piecewise", {{{-kInf, 1.0, false, false}, Logarithmic{2.0, 0.0}},
                                    {{1.0, kInf, true, false}, Affine{0.0, 0.0}}});
}

LossSpec LossSpec::ramp2() {
  return LossSpec("ramp2", {{{-kInf, 0.0, false, false}, Affine{-1.0, 2.0}},
                            {{0.0, 1.0, true, false}, Affine{-2.0, 2.0}},
                            {{1.0, kInf, true, false}, Affine{0.0, 0.0}}});
}

const std::vector<std::string>& LossSpec::builtin_names() {
  static const std::vector<std::string> names{"hinge", "squared-hinge", "log-piecewise", "ramp2"};
  return names;
}

LossSpec LossSpec::by_name(const std::string& name) {
  if (name == "hinge") return hinge();
  if (name == "squared-hinge") return squared_hinge();
  if (name == "log-piecewise") return log_piecewise();
  if (name == "ramp2") return ramp2();
  throw ConfigError("unknown loss '" + name + "' (expected hinge, squared-hinge, log-piecewise, ramp2)");
}

LossSpec LossSpec::from_json(const nlohmann::json& j) {
  try {
    std::vector<LossPiece> pieces;
    for (const auto& p : j.at("pieces")) {
      LossPiece piece;
      piece.on.lo = p.contains("lo") && !p["lo"].is_null() ? p["lo"].get<double>() : -kInf;
      piece.on.hi = p.contains("hi") && !p["hi"].is_null() ? p["hi"].get<double>() : kInf;
      piece.on.lo_closed = p.value("lo_closed", false);
      piece.on.hi_closed = p.value("hi_closed", false);
      const auto type = p.at("type").get<std::string>();
      if (type == "affine") {
        piece.form = Affine{p.value("a", 0.0), p.value("b", 0.0)};
      } else if (type == "quadratic") {
        piece.form = Quadratic{p.value("q", 0.0), p.value("a", 0.0), p.value("b", 0.0)};
      } else if (type == "logarithmic") {
        piece.form = Logarithmic{p.at("a").get<double>(), p.value("b", 0.0)};
      } else {
        throw UnsupportedPiece("unsupported loss piece type '" + type + "'");
      }
      pieces.push_back(piece);
    }
    LossProperties props;
    if (j.contains("properties")) {
      const auto& pj = j["properties"];
      props.lower_semi_continuous = pj.value("lower_semi_continuous", true);
      props.continuous_at_zero = pj.value("continuous_at_zero", true);
      props.zero_not_stationary = pj.value("zero_not_stationary", true);
    }
    return LossSpec(j.value("name", std::string("custom")), std::move(pieces), props);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed loss definition: ") + e.what());
  }
}

const LossPiece& LossSpec::piece_at(double u) const {
  for (const auto& piece : pieces_)
    if (piece.on.contains(u)) return piece;
  throw DomainError("margin is not covered by any loss piece");
}

double LossSpec::margin_value(double u) const { return evaluate_piece(piece_at(u).form, u); }

double evaluate_piece(const PieceForm& form, double u) {
  return std::visit(overloaded{
                        [&](const Affine& p) { return p.a * u + p.b; },
                        [&](const Quadratic& p) { return (p.q * u + p.a) * u + p.b; },
                        [&](const Logarithmic& p) { return p.a - u > 0.0 ? std::log(p.a - u) + p.b : kInf; },
                    },
                    form);
}

double loss_eval(const LossSpec& loss, int y, double t) { return loss.margin_value(static_cast<double>(y) * t); }

double prox_objective(const LossSpec& loss, int y, double e, double beta, int N, double alpha) {
  const double diff = alpha - e;
  return loss_eval(loss, y, alpha) / static_cast<double>(N) + 0.5 * beta * diff * diff;
}

double prox_step(const LossSpec& loss, int y, double e, double beta, int N) {
  const double sign = static_cast<double>(y);
  const double ub = sign * e;  // e on the margin axis

  std::vector<double> candidates;  // margins
  for (const auto& piece : loss.pieces()) {
    for (double u : stationary_points(piece.form, ub, beta, N)) candidates.push_back(clip(u, piece.on));
    if (std::isfinite(piece.on.hi)) candidates.push_back(piece.on.hi);
  }

  double best_alpha = 0.0;
  double best_value = kInf;
  bool first = true;
  for (double u : candidates) {
    const double alpha = sign * u;
    const double value = prox_objective(loss, y, e, beta, N, alpha);
    if (first || better(value, alpha, best_value, best_alpha, e)) {
      best_alpha = alpha;
      best_value = value;
      first = false;
    }
  }
  return best_alpha;
}

double prox_oracle_grid(const LossSpec& loss, int y, double e, double beta, int N, double lo, double hi,
                        double step) {
  if (!(lo < hi) || !(step > 0.0)) throw ConfigError("prox oracle: need lo < hi and step > 0");
  if (lo > std::min(e, -3.0) - 2.0 || hi < std::max(e, 3.0) + 2.0)
    throw ConfigError("prox oracle: search interval does not cover [min(e,-3)-2, max(e,3)+2]");

  auto objective = [&](double alpha) { return prox_objective(loss, y, e, beta, N, alpha); };

  const auto count = static_cast<long long>(std::floor((hi - lo) / step));
  double grid_best = lo;
  double grid_value = objective(lo);
  for (long long k = 1; k <= count; ++k) {
    const double alpha = lo + static_cast<double>(k) * step;
    const double value = objective(alpha);
    if (value < grid_value) {
      grid_value = value;
      grid_best = alpha;
    }
  }

  const double sign = static_cast<double>(y);
  const double a = std::max(lo, grid_best - step);
  const double b = std::min(hi, grid_best + step);
  std::vector<double> candidates{grid_best};

  for (const auto& piece : loss.pieces()) {
    // Piece interval mapped to the alpha axis.
    double plo = sign > 0 ? piece.on.lo : -piece.on.hi;
    double phi = sign > 0 ? piece.on.hi : -piece.on.lo;
    for (double bp : {plo, phi})
      if (std::isfinite(bp) && bp >= a && bp <= b) candidates.push_back(bp);
    double left = std::max(a, plo);
    double right = std::min(b, phi);
    if (!(left < right)) continue;
    // Golden section on the piece formula (continuous extension to the
    // closure of the piece).
    auto f = [&](double alpha) {
      const double diff = alpha - e;
      return evaluate_piece(piece.form, sign * alpha) / static_cast<double>(N) + 0.5 * beta * diff * diff;
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = right - inv_phi * (right - left);
    double x2 = left + inv_phi * (right - left);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && right - left > 1e-14 * (1.0 + std::abs(left)); ++it) {
      if (f1 <= f2) {
        right = x2;
        x2 = x1;
        f2 = f1;
        x1 = right - inv_phi * (right - left);
        f1 = f(x1);
      } else {
        left = x1;
        x1 = x2;
        f1 = f2;
        x2 = left + inv_phi * (right - left);
        f2 = f(x2);
      }
    }
    candidates.push_back(0.5 * (left + right));
  }

  double best = candidates.front();
  double best_value = objective(best);
  for (double alpha : candidates) {
    const double value = objective(alpha);
    if (value < best_value) {
      best_value = value;
      best = alpha;
    }
  }
  return best;
}

}  // namespace rkbs
