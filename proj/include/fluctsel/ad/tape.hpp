#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/ad/dual.hpp"
#include "fluctsel/core/error.hpp"

namespace fluctsel::ad {

enum class Op : std::uint8_t {
  Input,
  Const,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  AddC,   // a + c
  MulC,   // a * c
  CSub,   // c - a
  CDiv,   // c / a
  Exp,
  Log,
  Log1p,
  Sqrt,
  Square,
  Recip,
  Tanh,
  PowC,   // a ^ c
};

namespace detail {

inline bool is_zero(double x) { return x == 0.0; }
template <class V>
inline bool is_zero(const Dual<V>& x) {
  return is_zero(x.val) && is_zero(x.tan);
}

}  // namespace detail

/// Scalar-node evaluation tape.
///
/// Nodes are stored in topological order (every input index precedes the
/// node). The tape records operation codes, not just local partials, so it can
/// be replayed at new inputs and swept in any scalar type: `double` for plain
/// gradients, `Dual1` for forward-over-reverse Hessian columns.
///
/// Recording is single-writer. Once sealed, all sweep methods are const and
/// use caller-owned or local workspaces, so one tape can be swept from several
/// threads at once.
class Tape {
 public:
  struct Node {
    Op op;
    std::uint32_t a;
    std::uint32_t b;
    double c;
  };

  static constexpr std::uint32_t npos = 0xffffffffu;

  std::size_t num_inputs() const noexcept { return inputs_.size(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool sealed() const noexcept { return output_ != npos; }
  double output_value() const;
  std::span<const double> recorded_inputs() const noexcept { return input_values_; }

  /// Forward sweep at `inputs`; fills `values` and returns the output.
  template <class S>
  S forward(std::span<const S> inputs, std::vector<S>& values) const;

  /// Reverse sweep seeded with d(output) = 1 over precomputed `values`.
  template <class S>
  void reverse(const std::vector<S>& values, std::vector<S>& adjoints) const;

  /// Gradient at the recorded point.
  std::vector<double> gradient() const;
  /// Gradient after replaying at `x`. Throws NonFiniteValue if the primal is
  /// not finite.
  std::vector<double> gradient(std::span<const double> x, double* value = nullptr) const;
  /// Second partials over `block`, one forward-over-reverse sweep per block
  /// column, returned symmetrized.
  Eigen::MatrixXd hessian_block(std::span<const double> x,
                                std::span<const std::size_t> block) const;

 private:
  friend class Var;
  friend class Recorder;

  std::uint32_t push(Op op, std::uint32_t a, std::uint32_t b, double c, double value);

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> inputs_;
  std::vector<double> input_values_;
  std::uint32_t output_ = npos;
};

namespace detail {
inline thread_local Tape* active_tape = nullptr;
Tape& require_tape();
}  // namespace detail

/// Recorded scalar. Arithmetic on Vars appends nodes to the tape that is
/// active on the calling thread (see Recorder).
class Var {
 public:
  Var() : Var(0.0) {}
  Var(double c);  // NOLINT(implicit): constants mix freely with Vars

  double value() const noexcept { return val_; }
  std::uint32_t index() const noexcept { return idx_; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

  static Var make(Op op, std::uint32_t a, std::uint32_t b, double c, double value);

 private:
  Var(std::uint32_t idx, double val) : idx_(idx), val_(val) {}
  std::uint32_t idx_;
  double val_;
};

/// Makes a tape active on this thread for the lifetime of the object.
class Recorder {
 public:
  explicit Recorder(Tape& tape);
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  Var input(double x);
  void output(const Var& y);

 private:
  Tape& tape_;
  Tape* previous_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);
Var operator*(const Var& a, double c);
Var operator*(double c, const Var& a);
Var operator/(const Var& a, double c);
Var operator/(double c, const Var& a);

Var exp(const Var& a);
Var log(const Var& a);
Var log1p(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var recip(const Var& a);
Var tanh(const Var& a);
Var pow(const Var& a, double c);

inline double value_of(const Var& a) noexcept { return a.value(); }
inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }

/// Records `f` at `x`. `f` takes std::span<const Var> and returns Var.
template <class F>
Tape record(F&& f, std::span<const double> x) {
  Tape tape;
  Recorder rec(tape);
  std::vector<Var> in;
  in.reserve(x.size());
  for (double xi : x) in.push_back(rec.input(xi));
  Var y = f(std::span<const Var>(in));
  rec.output(y);
  return tape;
}

/// Reverse-mode gradient of `f` at `x` in one sweep.
template <class F>
std::vector<double> gradient(F&& f, std::span<const double> x, double* value = nullptr) {
  Tape tape = record(f, x);
  const double y = tape.output_value();
  if (!std::isfinite(y)) fail(Errc::NonFiniteValue, "ad::gradient: non-finite function value");
  if (value) *value = y;
  return tape.gradient();
}

/// Block of the Hessian of `f` via forward-over-reverse.
template <class F>
Eigen::MatrixXd hessian_block(F&& f, std::span<const double> x,
                              std::span<const std::size_t> block) {
  Tape tape = record(f, x);
  return tape.hessian_block(x, block);
}

// ---------------------------------------------------------------------------

template <class S>
S Tape::forward(std::span<const S> inputs, std::vector<S>& v) const {
  using std::exp;
  using std::log;
  using std::log1p;
  using std::pow;
  using std::sqrt;
  using std::tanh;
  if (inputs.size() != inputs_.size())
    fail(Errc::DimensionMismatch, "Tape::forward: wrong number of inputs");
  v.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Input: v[i] = inputs[n.a]; break;
      case Op::Const: v[i] = S(n.c); break;
      case Op::Add: v[i] = v[n.a] + v[n.b]; break;
      case Op::Sub: v[i] = v[n.a] - v[n.b]; break;
      case Op::Mul: v[i] = v[n.a] * v[n.b]; break;
      case Op::Div: v[i] = v[n.a] / v[n.b]; break;
      case Op::Neg: v[i] = -v[n.a]; break;
      case Op::AddC: v[i] = v[n.a] + n.c; break;
      case Op::MulC: v[i] = v[n.a] * n.c; break;
      case Op::CSub: v[i] = n.c - v[n.a]; break;
      case Op::CDiv: v[i] = n.c / v[n.a]; break;
      case Op::Exp: v[i] = exp(v[n.a]); break;
      case Op::Log: v[i] = log(v[n.a]); break;
      case Op::Log1p: v[i] = log1p(v[n.a]); break;
      case Op::Sqrt: v[i] = sqrt(v[n.a]); break;
      case Op::Square: v[i] = v[n.a] * v[n.a]; break;
      case Op::Recip: v[i] = 1.0 / v[n.a]; break;
      case Op::Tanh: v[i] = tanh(v[n.a]); break;
      case Op::PowC: v[i] = pow(v[n.a], n.c); break;
    }
  }
  return v[output_];
}

template <class S>
void Tape::reverse(const std::vector<S>& v, std::vector<S>& adj) const {
  adj.assign(nodes_.size(), S(0.0));
  adj[output_] = S(1.0);
  for (std::size_t k = output_ + 1; k-- > 0;) {
    const S& w = adj[k];
    if (detail::is_zero(w)) continue;
    const Node& n = nodes_[k];
    switch (n.op) {
      case Op::Input:
      case Op::Const: break;
      case Op::Add:
        adj[n.a] += w;
        adj[n.b] += w;
        break;
      case Op::Sub:
        adj[n.a] += w;
        adj[n.b] -= w;
        break;
      case Op::Mul:
        adj[n.a] += w * v[n.b];
        adj[n.b] += w * v[n.a];
        break;
      case Op::Div: {
        S wb = w / v[n.b];
        adj[n.a] += wb;
        adj[n.b] -= wb * v[k];
        break;
      }
      case Op::Neg: adj[n.a] -= w; break;
      case Op::AddC: adj[n.a] += w; break;
      case Op::MulC: adj[n.a] += w * n.c; break;
      case Op::CSub: adj[n.a] -= w; break;
      case Op::CDiv: adj[n.a] -= w * v[k] / v[n.a]; break;
      case Op::Exp: adj[n.a] += w * v[k]; break;
      case Op::Log: adj[n.a] += w / v[n.a]; break;
      case Op::Log1p: adj[n.a] += w / (v[n.a] + 1.0); break;
      case Op::Sqrt: adj[n.a] += w * 0.5 / v[k]; break;
      case Op::Square: adj[n.a] += w * 2.0 * v[n.a]; break;
      case Op::Recip: adj[n.a] -= w * v[k] * v[k]; break;
      case Op::Tanh: adj[n.a] += w * (1.0 - v[k] * v[k]); break;
      case Op::PowC: {
        using std::pow;
        adj[n.a] += w * n.c * pow(v[n.a], n.c - 1.0);
        break;
      }
    }
  }
}

}  // namespace fluctsel::ad
