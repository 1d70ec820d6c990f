#include "mcflow/patch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcflow {
namespace {

constexpr XReal kDetFloor = 1e-12L;

// Order-4 central first difference.
template <class F>
auto d1(const F& f, const XVec& u, int dir, XReal h) -> decltype(f(u)) {
  using T = decltype(f(u));
  XVec p = u;
  p[dir] = u[dir] - 2 * h;
  const T m2 = f(p);
  p[dir] = u[dir] - h;
  const T m1 = f(p);
  p[dir] = u[dir] + h;
  const T p1 = f(p);
  p[dir] = u[dir] + 2 * h;
  const T p2 = f(p);
  T r = (m2 - p2 + (p1 - m1) * XReal(8)) * (XReal(1) / (12 * h));
  return r;
}

// Order-4 central second difference (diagonal and cross terms).
template <class F>
auto d2(const F& f, const XVec& u, int i, int j, XReal h) -> decltype(f(u)) {
  using T = decltype(f(u));
  if (i == j) {
    XVec p = u;
    p[i] = u[i] - 2 * h;
    const T m2 = f(p);
    p[i] = u[i] - h;
    const T m1 = f(p);
    const T c0 = f(u);
    p[i] = u[i] + h;
    const T p1 = f(p);
    p[i] = u[i] + 2 * h;
    const T p2 = f(p);
    T r = ((m1 + p1) * XReal(16) - (m2 + p2) - c0 * XReal(30)) * (XReal(1) / (12 * h * h));
    return r;
  }
  static const int off[4] = {-2, -1, 1, 2};
  static const XReal cf[4] = {1, -8, 8, -1};
  XVec p = u;
  T acc{};
  bool first = true;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      p[i] = u[i] + off[a] * h;
      p[j] = u[j] + off[b] * h;
      T v = f(p) * (cf[a] * cf[b]);
      if (first) {
        acc = v;
        first = false;
      } else {
        acc += v;
      }
    }
  acc *= XReal(1) / (144 * h * h);
  return acc;
}

XReal ipow(XReal x, int e) {
  XReal r = 1;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

XVec cross3(const XVec& a, const XVec& b) {
  XVec c(3);
  c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return c;
}

// Reference directions for the codimension-2 normal frame, frozen per query so
// the frame field stays smooth across every stencil the query touches.
struct FrameRule {
  XVec r1, r2;
  bool has_refs = false;
};

std::vector<XVec> gram_schmidt_normals(const XVec& that, const FrameRule& rule) {
  XVec e1 = rule.r1 - rule.r1.dot(that) * that;
  e1.normalize();
  XVec e2 = rule.r2 - rule.r2.dot(that) * that - rule.r2.dot(e1) * e1;
  e2.normalize();
  return {e1, e2};
}

FrameRule make_frame_rule(const ImmersionPatch& p, const XVec& u, XReal h) {
  FrameRule rule;
  if (p.k != 2) return rule;
  XVec t = d1(p.eval, u, 0, h);
  t.normalize();
  XVec ax[3];
  for (int i = 0; i < 3; ++i) {
    ax[i] = XVec::Zero(3);
    ax[i][i] = 1;
  }
  const std::array<std::pair<int, int>, 3> pairs{{{2, 1}, {2, 0}, {0, 1}}};
  for (auto [a, b] : pairs) {
    const XReal n1 = (ax[a] - ax[a].dot(t) * t).norm();
    XVec e1 = (ax[a] - ax[a].dot(t) * t) / (n1 > 0 ? n1 : 1);
    const XReal n2 = (ax[b] - ax[b].dot(t) * t - ax[b].dot(e1) * e1).norm();
    if (n1 > 0.25L && n2 > 0.25L) {
      rule.r1 = ax[a];
      rule.r2 = ax[b];
      rule.has_refs = true;
      return rule;
    }
  }
  // Unreachable for unit tangents, kept as a deterministic fallback.
  rule.r1 = ax[0];
  rule.r2 = ax[1];
  rule.has_refs = true;
  return rule;
}

std::vector<XVec> make_frame(const ImmersionPatch& p, const XVec& F,
                             const std::vector<XVec>& dF, const FrameRule& rule) {
  const int d = p.ambient();
  if (p.k == 1) {
    XVec nu(d);
    if (p.n == 1 && d == 2) {
      nu << dF[0][1], -dF[0][0];
    } else if (p.n == 2 && d == 3) {
      nu = cross3(dF[0], dF[1]);
    } else {
      throw std::invalid_argument("make_frame: unsupported hypersurface signature");
    }
    const XReal nn = nu.norm();
    if (!(nn > 0)) throw ImmersionError("degenerate tangent plane");
    nu /= nn;
    const XVec ref = p.orient_ref.cast<XReal>();
    const XReal s = p.orient_outward ? nu.dot(F - ref) : nu.dot(ref);
    if (s < 0) nu = -nu;
    return {nu};
  }
  if (p.k == 2 && p.n == 1 && d == 3) {
    XVec t = dF[0];
    const XReal tn = t.norm();
    if (!(tn > 0)) throw ImmersionError("degenerate tangent");
    t /= tn;
    return gram_schmidt_normals(t, rule);
  }
  throw std::invalid_argument("make_frame: unsupported signature");
}

// Full pointwise jet in extended precision.
struct TX {
  XVec F;
  std::vector<XVec> dF;
  std::vector<std::vector<XVec>> d2F;
  XMat g, gi;
  std::vector<XVec> nu;
  std::vector<XMat> h;
  XVec H;
  XReal a2 = 0;
  std::vector<XMat> Gam;
  std::vector<XMat> C;  // normal connection, [i](gamma,beta)
  XReal trA3 = 0, Z = 0;
  XVec lapF;
};

TX tensors(const ImmersionPatch& p, const XVec& u, XReal h, const FrameRule& rule,
           bool need_conn) {
  const int n = p.n, k = p.k;
  TX t;
  t.F = p.eval(u);
  if (t.F.size() != p.ambient()) throw std::invalid_argument("patch eval: bad ambient size");
  t.dF.resize(n);
  for (int i = 0; i < n; ++i) t.dF[i] = d1(p.eval, u, i, h);
  t.d2F.assign(n, std::vector<XVec>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      t.d2F[i][j] = d2(p.eval, u, i, j, h);
      if (j != i) t.d2F[j][i] = t.d2F[i][j];
    }

  t.g.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t.g(i, j) = t.dF[i].dot(t.dF[j]);
  const XReal det = n == 1 ? t.g(0, 0) : t.g(0, 0) * t.g(1, 1) - t.g(0, 1) * t.g(1, 0);
  if (!(det > kDetFloor)) throw ImmersionError("metric determinant below floor");
  t.gi.resize(n, n);
  if (n == 1) {
    t.gi(0, 0) = 1 / t.g(0, 0);
  } else {
    t.gi(0, 0) = t.g(1, 1) / det;
    t.gi(1, 1) = t.g(0, 0) / det;
    t.gi(0, 1) = -t.g(0, 1) / det;
    t.gi(1, 0) = -t.g(1, 0) / det;
  }

  t.nu = make_frame(p, t.F, t.dF, rule);
  t.h.resize(k);
  t.H.resize(k);
  t.a2 = 0;
  for (int a = 0; a < k; ++a) {
    t.h[a].resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t.h[a](i, j) = -t.nu[a].dot(t.d2F[i][j]);
    const XMat S = t.gi * t.h[a];
    t.H[a] = S.trace();
    t.a2 += (S * S).trace();
  }

  // Christoffels from exact metric derivatives of the difference jet.
  std::vector<XMat> dg(n, XMat(n, n));
  for (int kk = 0; kk < n; ++kk)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dg[kk](i, j) = t.d2F[kk][i].dot(t.dF[j]) + t.dF[i].dot(t.d2F[kk][j]);
  t.Gam.assign(n, XMat::Zero(n, n));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        XReal s = 0;
        for (int m = 0; m < n; ++m)
          s += t.gi(l, m) * (dg[i](j, m) + dg[j](i, m) - dg[m](i, j));
        t.Gam[l](i, j) = s / 2;
      }

  t.lapF = XVec::Zero(p.ambient());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      XVec v = t.d2F[i][j];
      for (int l = 0; l < n; ++l) v -= t.Gam[l](i, j) * t.dF[l];
      t.lapF += t.gi(i, j) * v;
    }

  if (k == 1) {
    const XMat S = t.gi * t.h[0];
    t.trA3 = (S * S * S).trace();
    t.Z = t.H[0] * t.trA3 - t.a2 * t.a2;
  } else {
    t.trA3 = t.Z = std::numeric_limits<XReal>::quiet_NaN();
  }

  if (need_conn) {
    t.C.assign(n, XMat::Zero(k, k));
    const XReal hs = h / 2;
    for (int b = 0; b < k; ++b) {
      auto ffield = [&](const XVec& v) -> XVec {
        std::vector<XVec> dFv(n);
        for (int i = 0; i < n; ++i) dFv[i] = d1(p.eval, v, i, hs);
        return make_frame(p, p.eval(v), dFv, rule)[b];
      };
      for (int i = 0; i < n; ++i) {
        const XVec de = d1(ffield, u, i, hs);
        for (int c = 0; c < k; ++c) t.C[i](c, b) = de.dot(t.nu[c]);
      }
    }
  }
  return t;
}

void validate_interior(const ImmersionPatch& p, const XVec& u, XReal margin) {
  if (u.size() != p.n) throw std::invalid_argument("parameter dimension mismatch");
  for (int i = 0; i < p.n && i < static_cast<int>(p.clip.size()); ++i) {
    if (!p.clip[i]) continue;
    const auto& iv = *p.clip[i];
    if (u[i] - margin < iv[0] || u[i] + margin > iv[1])
      throw std::invalid_argument("parameter point too close to the patch boundary");
  }
}

int hflat(int k, int n, int a, int i, int j) {
  (void)k;
  return (a * n + i) * n + j;
}

XVec flatten_h(const TX& t, int k, int n) {
  XVec out(k * n * n);
  for (int a = 0; a < k; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[hflat(k, n, a, i, j)] = t.h[a](i, j);
  return out;
}

// nabla_l h_{a ij} from the jet at `u` with the h-field sampled at spacing hs.
std::vector<std::vector<XMat>> covariant_grad_h(const ImmersionPatch& p, const XVec& u,
                                                XReal h, const FrameRule& rule,
                                                const TX& t0) {
  const int n = p.n, k = p.k;
  auto hfield = [&](const XVec& v) -> XVec {
    return flatten_h(tensors(p, v, h / 2, rule, false), k, n);
  };
  std::vector<XVec> dh(n);
  for (int l = 0; l < n; ++l) dh[l] = d1(hfield, u, l, h);
  std::vector<std::vector<XMat>> grad(k, std::vector<XMat>(n, XMat::Zero(n, n)));
  for (int a = 0; a < k; ++a)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          XReal s = dh[l][hflat(k, n, a, i, j)];
          if (k >= 2)
            for (int g2 = 0; g2 < k; ++g2) s += t0.C[l](a, g2) * t0.h[g2](i, j);
          for (int m = 0; m < n; ++m)
            s -= t0.Gam[m](l, i) * t0.h[a](m, j) + t0.Gam[m](l, j) * t0.h[a](i, m);
          grad[a][l](i, j) = s;
        }
  return grad;
}

XReal grad_h_norm2(const TX& t0, const std::vector<std::vector<XMat>>& grad, int n, int k) {
  XReal s = 0;
  for (int a = 0; a < k; ++a)
    for (int l = 0; l < n; ++l)
      for (int lp = 0; lp < n; ++lp)
        for (int i = 0; i < n; ++i)
          for (int ip = 0; ip < n; ++ip)
            for (int j = 0; j < n; ++j)
              for (int jp = 0; jp < n; ++jp)
                s += t0.gi(l, lp) * t0.gi(i, ip) * t0.gi(j, jp) * grad[a][l](i, j) *
                     grad[a][lp](ip, jp);
  return s;
}

// Covariant Hessian of a scalar field sampled at spacing h/2.
struct ScalarJet {
  XVec grad;  // partial derivatives
  XMat hess;  // covariant second derivatives
  XReal laplace = 0;
};

template <class F>
ScalarJet scalar_jet(const F& field, const XVec& u, XReal h, const TX& t0, int n) {
  ScalarJet out;
  out.grad.resize(n);
  for (int i = 0; i < n; ++i) out.grad[i] = d1(field, u, i, h);
  out.hess.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      XReal v = d2(field, u, i, j, h);
      for (int l = 0; l < n; ++l) v -= t0.Gam[l](i, j) * out.grad[l];
      out.hess(i, j) = v;
      out.hess(j, i) = v;
    }
  out.laplace = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.laplace += t0.gi(i, j) * out.hess(i, j);
  return out;
}

// Rough Laplacian of h (hypersurface), nested two levels below `h`.
XMat laplace_h(const ImmersionPatch& p, const XVec& u, XReal h, const FrameRule& rule,
               const TX& t0) {
  const int n = p.n;
  auto tfield = [&](const XVec& v) -> XVec {
    const TX s = tensors(p, v, h / 2, rule, false);
    const auto grad = covariant_grad_h(p, v, h / 2, rule, s);
    XVec out(n * n * n);
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[(l * n + i) * n + j] = grad[0][l](i, j);
    return out;
  };
  const XVec T0 = tfield(u);
  auto T = [&](int l, int i, int j) { return T0[(l * n + i) * n + j]; };
  std::vector<XVec> dT(n);
  for (int kk = 0; kk < n; ++kk) dT[kk] = d1(tfield, u, kk, h);

  XMat lap = XMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      XReal acc = 0;
      for (int kk = 0; kk < n; ++kk)
        for (int l = 0; l < n; ++l) {
          XReal v = dT[kk][(l * n + i) * n + j];
          for (int m = 0; m < n; ++m)
            v -= t0.Gam[m](kk, l) * T(m, i, j) + t0.Gam[m](kk, i) * T(l, m, j) +
                 t0.Gam[m](kk, j) * T(l, i, m);
          acc += t0.gi(kk, l) * v;
        }
      lap(i, j) = acc;
    }
  return lap;
}

double to_d(XReal x) { return static_cast<double>(x); }

Eigen::VectorXd to_dv(const XVec& v) { return v.cast<double>(); }

ShapeTensors export_tensors(const TX& t, int n, int k, int d) {
  ShapeTensors out;
  out.position = to_dv(t.F);
  out.tangents.resize(n);
  for (int i = 0; i < n; ++i) out.tangents[i] = to_dv(t.dF[i]);
  out.metric = t.g.cast<double>();
  out.metric_inv = t.gi.cast<double>();
  out.frame.resize(k);
  for (int a = 0; a < k; ++a) out.frame[a] = to_dv(t.nu[a]);
  out.second_form.resize(k);
  for (int a = 0; a < k; ++a) out.second_form[a] = t.h[a].cast<double>();
  out.mean_curvature = to_dv(t.H);
  out.a2 = to_d(t.a2);
  out.christoffel.resize(n);
  for (int l = 0; l < n; ++l) out.christoffel[l] = t.Gam[l].cast<double>();
  out.normal_conn.resize(t.C.size());
  for (size_t i = 0; i < t.C.size(); ++i) out.normal_conn[i] = t.C[i].cast<double>();
  out.tr_a3 = to_d(t.trA3);
  out.z_invariant = to_d(t.Z);
  out.laplace_position = to_dv(t.lapF);
  (void)d;
  return out;
}

// Potential contractions, evaluated once per query point in double precision.
struct FieldAt {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  const PotentialField* f;
  Eigen::VectorXd x;

  XReal d2w(const XVec& a, const XVec& b) const {
    return static_cast<XReal>(to_dv(a).dot(hess * to_dv(b)));
  }
  XReal d3w(const XVec& a, const XVec& b, const XVec& c) const {
    return static_cast<XReal>(f->third_derivative(x, to_dv(a), to_dv(b), to_dv(c)));
  }
  XReal dot_grad(const XVec& a) const { return static_cast<XReal>(grad.dot(to_dv(a))); }
};

FieldAt field_at(const PotentialField& f, const XVec& x) {
  FieldAt out;
  out.x = to_dv(x);
  out.grad = f.gradient(out.x);
  out.hess = f.hessian(out.x);
  out.f = &f;
  return out;
}

}  // namespace

ShapeTensors shape_tensors(const ImmersionPatch& p, const Eigen::VectorXd& u) {
  return shape_tensors(p, u, p.stencil);
}

ShapeTensors shape_tensors(const ImmersionPatch& p, const Eigen::VectorXd& u, double h) {
  const XVec ux = u.cast<XReal>();
  validate_interior(p, ux, 3 * static_cast<XReal>(h));
  const FrameRule rule = make_frame_rule(p, ux, h);
  const TX t = tensors(p, ux, h, rule, p.k >= 2);
  return export_tensors(t, p.n, p.k, p.ambient());
}

CovariantA covariant_a(const ImmersionPatch& p, const Eigen::VectorXd& u) {
  return covariant_a(p, u, p.stencil);
}

CovariantA covariant_a(const ImmersionPatch& p, const Eigen::VectorXd& u, double h) {
  const XVec ux = u.cast<XReal>();
  const XReal hx = h;
  validate_interior(p, ux, 4 * hx);
  const FrameRule rule = make_frame_rule(p, ux, hx);
  const TX t0 = tensors(p, ux, hx, rule, p.k >= 2);
  const auto grad = covariant_grad_h(p, ux, hx, rule, t0);
  CovariantA out;
  out.grad_h.assign(p.k, std::vector<Eigen::MatrixXd>(p.n));
  for (int a = 0; a < p.k; ++a)
    for (int l = 0; l < p.n; ++l) out.grad_h[a][l] = grad[a][l].cast<double>();
  out.norm2 = to_d(grad_h_norm2(t0, grad, p.n, p.k));
  return out;
}

std::map<std::string, double> structure_residuals(const ImmersionPatch& p,
                                                  const Eigen::VectorXd& u, double h) {
  const int n = p.n, k = p.k;
  const XVec ux = u.cast<XReal>();
  const XReal hx = h;
  validate_interior(p, ux, 4 * hx);
  const FrameRule rule = make_frame_rule(p, ux, hx);
  const TX t0 = tensors(p, ux, hx, rule, true);
  std::map<std::string, double> out;

  // Gauss equation: intrinsic curvature against the quadratic form of h.
  {
    auto gfield = [&](const XVec& v) -> XVec {
      const TX s = tensors(p, v, hx / 2, rule, false);
      XVec flat(n * n * n);
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) flat[(l * n + i) * n + j] = s.Gam[l](i, j);
      return flat;
    };
    std::vector<XVec> dG(n);
    for (int i = 0; i < n; ++i) dG[i] = d1(gfield, ux, i, hx);
    auto dGam = [&](int pdir, int l, int i, int j) {
      return dG[pdir][(l * n + i) * n + j];
    };
    XReal worst = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l) {
            XReal rlow = 0;
            for (int m = 0; m < n; ++m) {
              XReal rop = dGam(j, m, i, kk) - dGam(i, m, j, kk);
              for (int s = 0; s < n; ++s)
                rop += t0.Gam[s](i, kk) * t0.Gam[m](j, s) -
                       t0.Gam[s](j, kk) * t0.Gam[m](i, s);
              rlow += t0.g(l, m) * rop;
            }
            XReal rhs = 0;
            for (int a = 0; a < k; ++a)
              rhs += t0.h[a](i, kk) * t0.h[a](j, l) - t0.h[a](j, kk) * t0.h[a](i, l);
            worst = std::max(worst, std::abs(rlow - rhs));
          }
    out["gauss"] = to_d(worst);
  }

  // Codazzi: total symmetry of nabla h.
  {
    const auto grad = covariant_grad_h(p, ux, hx, rule, t0);
    XReal worst = 0;
    for (int a = 0; a < k; ++a)
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            worst = std::max(worst, std::abs(grad[a][l](i, j) - grad[a][i](l, j)));
    out["codazzi"] = to_d(worst);
  }

  // Weingarten relation for every frame vector.
  {
    const XReal hs = hx / 2;
    XReal worst = 0;
    for (int b = 0; b < k; ++b) {
      auto ffield = [&](const XVec& v) -> XVec {
        std::vector<XVec> dFv(n);
        for (int i = 0; i < n; ++i) dFv[i] = d1(p.eval, v, i, hs);
        return make_frame(p, p.eval(v), dFv, rule)[b];
      };
      for (int i = 0; i < n; ++i) {
        XVec r = d1(ffield, ux, i, hs);
        for (int l = 0; l < n; ++l)
          for (int m = 0; m < n; ++m) r -= t0.gi(l, m) * t0.h[b](i, m) * t0.dF[l];
        for (int c = 0; c < k; ++c) r -= t0.C[i](c, b) * t0.nu[c];
        worst = std::max(worst, r.norm());
      }
    }
    out["weingarten"] = to_d(worst);
  }

  if (k >= 2) {
    // Normal curvature against the commutator of shape operators.
    auto cfield = [&](const XVec& v) -> XVec {
      const TX s = tensors(p, v, hx / 2, rule, true);
      XVec flat(n * k * k);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b) flat[(i * k + a) * k + b] = s.C[i](a, b);
      return flat;
    };
    std::vector<XVec> dC(n);
    for (int i = 0; i < n; ++i) dC[i] = d1(cfield, ux, i, hx);
    auto dCc = [&](int pdir, int i, int a, int b) { return dC[pdir][(i * k + a) * k + b]; };
    XReal worst = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            XReal lhs = dCc(i, j, a, b) - dCc(j, i, a, b);
            for (int c = 0; c < k; ++c)
              lhs += t0.C[i](a, c) * t0.C[j](c, b) - t0.C[j](a, c) * t0.C[i](c, b);
            XReal rhs = 0;
            for (int kk = 0; kk < n; ++kk)
              for (int l = 0; l < n; ++l)
                rhs += t0.gi(kk, l) *
                       (t0.h[a](i, kk) * t0.h[b](j, l) - t0.h[a](j, kk) * t0.h[b](i, l));
            worst = std::max(worst, std::abs(lhs - rhs));
          }
    out["ricci"] = to_d(worst);
  }

  if (k == 1) {
    // Tangential Hessian of F against -h nu.
    XReal worst = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        XVec r = t0.d2F[i][j];
        for (int l = 0; l < n; ++l) r -= t0.Gam[l](i, j) * t0.dF[l];
        r += t0.h[0](i, j) * t0.nu[0];
        worst = std::max(worst, r.norm());
      }
    out["hessian_normal"] = to_d(worst);

    // d(nu) against the shape operator.
    const XReal hs = hx / 2;
    auto nufield = [&](const XVec& v) -> XVec {
      std::vector<XVec> dFv(n);
      for (int i = 0; i < n; ++i) dFv[i] = d1(p.eval, v, i, hs);
      return make_frame(p, p.eval(v), dFv, rule)[0];
    };
    XReal worst2 = 0;
    for (int i = 0; i < n; ++i) {
      XVec r = d1(nufield, ux, i, hs);
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) r -= t0.gi(l, m) * t0.h[0](i, m) * t0.dF[l];
      worst2 = std::max(worst2, r.norm());
    }
    out["normal_derivative"] = to_d(worst2);
  }
  return out;
}

std::map<std::string, double> simons_residuals(const ImmersionPatch& p,
                                               const Eigen::VectorXd& u, double h) {
  if (p.k != 1) throw std::invalid_argument("simons_residuals: hypersurface only");
  const int n = p.n;
  const XVec ux = u.cast<XReal>();
  const XReal hx = h;
  validate_interior(p, ux, 4 * hx);
  const FrameRule rule;
  const TX t0 = tensors(p, ux, hx, rule, false);

  auto Hfield = [&](const XVec& v) -> XReal { return tensors(p, v, hx / 2, rule, false).H[0]; };
  const ScalarJet jH = scalar_jet(Hfield, ux, hx, t0, n);
  const XMat lap_h = laplace_h(p, ux, hx, rule, t0);
  const XMat hh = t0.h[0] * t0.gi * t0.h[0];

  std::map<std::string, double> out;
  XReal worst = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const XReal rhs = lap_h(i, j) - t0.H[0] * hh(i, j) + t0.a2 * t0.h[0](i, j);
      worst = std::max(worst, std::abs(jH.hess(i, j) - rhs));
    }
  out["simons_tensor"] = to_d(worst);

  auto a2field = [&](const XVec& v) -> XReal { return tensors(p, v, hx / 2, rule, false).a2; };
  const ScalarJet ja2 = scalar_jet(a2field, ux, hx, t0, n);
  const auto grad = covariant_grad_h(p, ux, hx, rule, t0);
  const XReal na2 = grad_h_norm2(t0, grad, n, 1);
  const XMat hup = t0.gi * t0.h[0] * t0.gi;
  XReal lhs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lhs += 2 * hup(i, j) * jH.hess(i, j);
  const XReal rhs = ja2.laplace - 2 * na2 - 2 * t0.Z;
  out["simons_contracted"] = to_d(std::abs(lhs - rhs));
  return out;
}

EvolutionBreakdown evolution_residual_hypersurface(const ImmersionPatch& p,
                                                   const PotentialField& field,
                                                   const Eigen::VectorXd& u, double eps) {
  return evolution_residual_hypersurface(p, field, u, eps, p.stencil);
}

EvolutionBreakdown evolution_residual_hypersurface(const ImmersionPatch& p,
                                                   const PotentialField& field,
                                                   const Eigen::VectorXd& u, double eps,
                                                   double h) {
  if (p.k != 1) throw std::invalid_argument("evolution_residual_hypersurface: codim 1 only");
  if (field.dimension() != p.ambient())
    throw std::invalid_argument("potential dimension mismatch");
  const int n = p.n;
  const XVec ux = u.cast<XReal>();
  const XReal hx = h, ex = eps;
  validate_interior(p, ux, 4 * hx);
  const FrameRule rule;
  const TX t0 = tensors(p, ux, hx, rule, false);
  const FieldAt w = field_at(field, t0.F);

  // Normal speed H - <grad w, nu>, evaluated as a smooth field.
  auto deformed = [&, ex](const XVec& v) -> XVec {
    const TX s = tensors(p, v, hx / 2, rule, false);
    const Eigen::VectorXd gw = field.gradient(to_dv(s.F));
    const XReal speed = s.H[0] - static_cast<XReal>(gw.dot(to_dv(s.nu[0])));
    return s.F - ex * speed * s.nu[0];
  };
  ImmersionPatch pe = p;
  pe.eval = deformed;
  const TX te = tensors(pe, ux, hx, rule, false);

  EvolutionBreakdown out;
  out.lhs = to_d((te.a2 - t0.a2) / ex);

  auto a2field = [&](const XVec& v) -> XReal { return tensors(p, v, hx / 2, rule, false).a2; };
  const ScalarJet ja2 = scalar_jet(a2field, ux, hx, t0, n);
  const auto grad = covariant_grad_h(p, ux, hx, rule, t0);
  const XReal na2 = grad_h_norm2(t0, grad, n, 1);

  const XMat hup = t0.gi * t0.h[0] * t0.gi;       // h^{ij}
  const XMat M = t0.gi * t0.h[0];                 // shape operator
  const XMat hup2 = t0.gi * t0.h[0] * M * t0.gi;  // h^{ij} h_j^l contracted pairing

  XReal term_d3 = 0, term_mixed = 0, term_transport = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      term_d3 += -2 * hup(i, j) * w.d3w(t0.dF[i], t0.dF[j], t0.nu[0]);
      term_mixed += -4 * hup2(i, j) * w.d2w(t0.dF[i], t0.dF[j]);
      term_transport += -t0.gi(i, j) * ja2.grad[j] * w.dot_grad(t0.dF[i]);
    }
  const XReal term_nn = 2 * t0.a2 * w.d2w(t0.nu[0], t0.nu[0]);

  const XReal rhs = ja2.laplace - 2 * na2 + 2 * t0.a2 * t0.a2 + term_d3 + term_nn +
                    term_mixed + term_transport;
  out.rhs = to_d(rhs);
  out.residual = std::abs(out.lhs - out.rhs);
  out.terms["laplace_a2"] = to_d(ja2.laplace);
  out.terms["grad_a_sq"] = to_d(na2);
  out.terms["a2_sq"] = to_d(2 * t0.a2 * t0.a2);
  out.terms["third_derivative"] = to_d(term_d3);
  out.terms["hessian_normal_normal"] = to_d(term_nn);
  out.terms["hessian_tangent"] = to_d(term_mixed);
  out.terms["transport"] = to_d(term_transport);

  // Per-component form.
  const XMat lap_h = laplace_h(p, ux, hx, rule, t0);
  const XMat hh = t0.h[0] * t0.gi * t0.h[0];
  const XReal phi = w.dot_grad(t0.nu[0]);
  XMat W(n, n);  // h_i^l  d2w(dF_j, dF_l)
  const XMat hmixm = t0.h[0] * t0.gi;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      XReal s = 0;
      for (int l = 0; l < n; ++l) s += hmixm(i, l) * w.d2w(t0.dF[j], t0.dF[l]);
      W(i, j) = s;
    }
  XReal worst_sym = 0, worst_lit = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const XReal dhdt = (te.h[0](i, j) - t0.h[0](i, j)) / ex;
      XReal transport = 0;
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m)
          transport += t0.gi(l, m) * grad[0][m](i, j) * w.dot_grad(t0.dF[l]);
      const XReal base = lap_h(i, j) - 2 * t0.H[0] * hh(i, j) + t0.a2 * t0.h[0](i, j) -
                         w.d3w(t0.dF[i], t0.dF[j], t0.nu[0]) +
                         t0.h[0](i, j) * w.d2w(t0.nu[0], t0.nu[0]) - transport +
                         2 * hh(i, j) * phi;
      worst_sym = std::max(worst_sym, std::abs(dhdt - (base - W(i, j) - W(j, i))));
      worst_lit = std::max(worst_lit, std::abs(dhdt - (base - 2 * W(i, j))));
    }
  out.hij_symmetrized = to_d(worst_sym);
  out.hij_literal = to_d(worst_lit);
  return out;
}

EvolutionBreakdown evolution_residual_highercodim(const ImmersionPatch& p,
                                                  const PotentialField& field,
                                                  const Eigen::VectorXd& u, double eps) {
  return evolution_residual_highercodim(p, field, u, eps, p.stencil);
}

EvolutionBreakdown evolution_residual_highercodim(const ImmersionPatch& p,
                                                  const PotentialField& field,
                                                  const Eigen::VectorXd& u, double eps,
                                                  double h) {
  if (p.k < 2) throw std::invalid_argument("evolution_residual_highercodim: codim >= 2 only");
  if (field.dimension() != p.ambient())
    throw std::invalid_argument("potential dimension mismatch");
  const int n = p.n, k = p.k;
  const XVec ux = u.cast<XReal>();
  const XReal hx = h, ex = eps;
  validate_interior(p, ux, 4 * hx);
  const FrameRule rule = make_frame_rule(p, ux, hx);
  const TX t0 = tensors(p, ux, hx, rule, true);
  const FieldAt w = field_at(field, t0.F);

  // Frame-free velocity: Laplace F plus the normal part of grad w.
  auto deformed = [&, ex](const XVec& v) -> XVec {
    const TX s = tensors(p, v, hx / 2, rule, false);
    XVec wg = field.gradient(to_dv(s.F)).cast<XReal>();
    // orthonormalize tangents, project off
    std::vector<XVec> on;
    for (int i = 0; i < n; ++i) {
      XVec t = s.dF[i];
      for (const auto& e : on) t -= t.dot(e) * e;
      t.normalize();
      on.push_back(t);
    }
    for (const auto& e : on) wg -= wg.dot(e) * e;
    return s.F + ex * (s.lapF + wg);
  };
  ImmersionPatch pe = p;
  pe.eval = deformed;
  const TX te = tensors(pe, ux, hx, rule, false);

  EvolutionBreakdown out;
  out.lhs = to_d((te.a2 - t0.a2) / ex);

  auto a2field = [&](const XVec& v) -> XReal { return tensors(p, v, hx / 2, rule, false).a2; };
  const ScalarJet ja2 = scalar_jet(a2field, ux, hx, t0, n);
  const auto grad = covariant_grad_h(p, ux, hx, rule, t0);
  const XReal na2 = grad_h_norm2(t0, grad, n, k);

  // Orthonormal tangent basis E_a = sum_i M(a,i) dF_i with M = chol(g)^-1.
  const Eigen::LLT<XMat> llt(t0.g);
  const XMat L = llt.matrixL();
  const XMat Mon = L.inverse();
  std::vector<XVec> E(n, XVec::Zero(p.ambient()));
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) E[a] += Mon(a, i) * t0.dF[i];
  std::vector<XMat> hon(k);
  for (int a = 0; a < k; ++a) hon[a] = Mon * t0.h[a] * Mon.transpose();

  XReal term_d3 = 0, term_hh = 0, term_mixed = 0, term_transport = 0;
  for (int al = 0; al < k; ++al)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        term_d3 += -2 * hon[al](a, b) * w.d3w(E[b], E[a], t0.nu[al]);
  for (int al = 0; al < k; ++al)
    for (int be = 0; be < k; ++be) {
      XReal dot = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) dot += hon[al](a, b) * hon[be](a, b);
      term_hh += 2 * dot * w.d2w(t0.nu[al], t0.nu[be]);
    }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      XReal dot = 0;
      for (int al = 0; al < k; ++al)
        for (int i = 0; i < n; ++i) dot += hon[al](i, a) * hon[al](i, b);
      term_mixed += -4 * dot * w.d2w(E[a], E[b]);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      term_transport += -t0.gi(i, j) * ja2.grad[j] * w.dot_grad(t0.dF[i]);

  XReal term_comm = 0;
  for (int al = 0; al < k; ++al)
    for (int ga = 0; ga < k; ++ga)
      for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m) {
          XReal s = 0;
          for (int kk = 0; kk < n; ++kk)
            s += hon[al](i, kk) * hon[ga](m, kk) - hon[al](m, kk) * hon[ga](i, kk);
          term_comm += 2 * s * s;
        }
  XReal term_quad = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int kk = 0; kk < n; ++kk)
        for (int m = 0; m < n; ++m) {
          XReal s = 0;
          for (int al = 0; al < k; ++al) s += hon[al](i, j) * hon[al](m, kk);
          term_quad += 2 * s * s;
        }

  const XReal rhs = ja2.laplace - 2 * na2 + term_d3 + term_hh + term_mixed +
                    term_transport + term_comm + term_quad;
  out.rhs = to_d(rhs);
  out.residual = std::abs(out.lhs - out.rhs);
  out.terms["laplace_a2"] = to_d(ja2.laplace);
  out.terms["grad_a_sq"] = to_d(na2);
  out.terms["third_derivative"] = to_d(term_d3);
  out.terms["hessian_normal_normal"] = to_d(term_hh);
  out.terms["hessian_tangent"] = to_d(term_mixed);
  out.terms["transport"] = to_d(term_transport);
  out.terms["commutator_sq"] = to_d(term_comm);
  out.terms["contraction_sq"] = to_d(term_quad);
  out.hij_symmetrized = out.hij_literal = std::numeric_limits<double>::quiet_NaN();
  return out;
}

const IdentityEntry* IdentityResidualReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

IdentityEntry estimate_order(const std::string& name, double r_coarse, double r_fine,
                             double fine_resolution) {
  IdentityEntry e;
  e.name = name;
  e.residual = r_fine;
  e.stencil = fine_resolution;
  if (r_coarse < 1e-13 && r_fine < 1e-13) {
    e.exact = true;
    e.order = 0.0;
  } else if (r_fine <= 0.0) {
    e.exact = false;
    e.order = std::numeric_limits<double>::infinity();
  } else {
    e.order = std::log2(r_coarse / r_fine);
  }
  return e;
}

IdentityResidualReport verify_patch(const ImmersionPatch& p, const PotentialField* field,
                                    double h) {
  IdentityResidualReport rep;
  std::map<std::string, double> coarse, fine;
  auto absorb = [](std::map<std::string, double>& into,
                   const std::map<std::string, double>& from) {
    for (const auto& [k2, v] : from) {
      auto it = into.find(k2);
      if (it == into.end())
        into[k2] = v;
      else
        it->second = std::max(it->second, v);
    }
  };
  for (const auto& u : p.sample_points) {
    absorb(coarse, structure_residuals(p, u, 2 * h));
    absorb(fine, structure_residuals(p, u, h));
    if (p.k == 1) {
      absorb(coarse, simons_residuals(p, u, 2 * h));
      absorb(fine, simons_residuals(p, u, h));
    }
  }
  for (const auto& [name, rf] : fine)
    rep.entries.push_back(estimate_order(name, coarse.at(name), rf, h));

  if (field != nullptr && field->dimension() == p.ambient()) {
    std::map<std::string, double> ec, ef, er;
    for (const auto& u : p.sample_points) {
      if (p.k == 1) {
        const auto at = evolution_residual_hypersurface(p, *field, u, 1e-6, h);
        const auto c4 = evolution_residual_hypersurface(p, *field, u, 1e-4, h);
        const auto c5 = evolution_residual_hypersurface(p, *field, u, 5e-5, h);
        absorb(er, {{"evolution_a2", at.residual},
                    {"evolution_h_symmetrized", at.hij_symmetrized},
                    {"evolution_h_literal", at.hij_literal}});
        absorb(ec, {{"evolution_a2", c4.residual},
                    {"evolution_h_symmetrized", c4.hij_symmetrized},
                    {"evolution_h_literal", c4.hij_literal}});
        absorb(ef, {{"evolution_a2", c5.residual},
                    {"evolution_h_symmetrized", c5.hij_symmetrized},
                    {"evolution_h_literal", c5.hij_literal}});
      } else {
        const auto at = evolution_residual_highercodim(p, *field, u, 1e-6, h);
        const auto c4 = evolution_residual_highercodim(p, *field, u, 1e-4, h);
        const auto c5 = evolution_residual_highercodim(p, *field, u, 5e-5, h);
        absorb(er, {{"evolution_a2", at.residual}});
        absorb(ec, {{"evolution_a2", c4.residual}});
        absorb(ef, {{"evolution_a2", c5.residual}});
      }
    }
    for (const auto& [name, r] : er) {
      IdentityEntry e = estimate_order(name, ec.at(name), ef.at(name), 5e-5);
      e.residual = r;  // reported at the default eps
      e.stencil = 1e-6;
      rep.entries.push_back(e);
    }
  }
  return rep;
}

// ---- shape factories ----

namespace {

std::vector<Eigen::VectorXd> curve_samples() {
  std::vector<Eigen::VectorXd> pts;
  for (double t : {0.3, 1.1, 2.0, 3.7, 5.2}) {
    Eigen::VectorXd u(1);
    u << t;
    pts.push_back(u);
  }
  return pts;
}

std::vector<Eigen::VectorXd> surface_samples() {
  std::vector<Eigen::VectorXd> pts;
  const double uv[5][2] = {{0.7, 1.1}, {1.3, 0.9}, {2.1, 1.4}, {0.4, 1.9}, {3.0, 0.8}};
  for (auto& q : uv) {
    Eigen::VectorXd u(2);
    u << q[0], q[1];
    pts.push_back(u);
  }
  return pts;
}

}  // namespace

ImmersionPatch circle_patch(double radius) {
  if (!(radius > 0)) throw std::invalid_argument("circle_patch: radius must be positive");
  ImmersionPatch p;
  p.shape = "circle";
  p.n = 1;
  p.k = 1;
  const XReal R = radius;
  p.eval = [R](const XVec& u) {
    XVec f(2);
    f << R * std::cos(u[0]), R * std::sin(u[0]);
    return f;
  };
  p.orient_outward = true;
  p.orient_ref = Eigen::VectorXd::Zero(2);
  p.sample_points = curve_samples();
  p.clip = {std::nullopt};
  return p;
}

ImmersionPatch ellipse_patch(double a, double b) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("ellipse_patch: bad semi-axes");
  ImmersionPatch p;
  p.shape = "ellipse";
  p.n = 1;
  p.k = 1;
  const XReal ax = a, bx = b;
  p.eval = [ax, bx](const XVec& u) {
    XVec f(2);
    f << ax * std::cos(u[0]), bx * std::sin(u[0]);
    return f;
  };
  p.orient_outward = true;
  p.orient_ref = Eigen::VectorXd::Zero(2);
  p.sample_points = curve_samples();
  p.clip = {std::nullopt};
  return p;
}

ImmersionPatch tilted_circle_patch(double radius, const Eigen::Vector3d& plane_normal) {
  if (!(radius > 0)) throw std::invalid_argument("tilted_circle_patch: radius must be positive");
  const double nn = plane_normal.norm();
  if (!(nn > 0)) throw std::invalid_argument("tilted_circle_patch: zero normal");
  const Eigen::Vector3d nh = plane_normal / nn;
  Eigen::Vector3d seed = std::abs(nh.z()) < 0.9 ? Eigen::Vector3d::UnitZ()
                                                : Eigen::Vector3d::UnitX();
  Eigen::Vector3d pb = (seed - seed.dot(nh) * nh).normalized();
  Eigen::Vector3d qb = nh.cross(pb);
  ImmersionPatch p;
  p.shape = "tilted_circle";
  p.n = 1;
  p.k = 2;
  const XReal R = radius;
  const XVec px = pb.cast<XReal>(), qx = qb.cast<XReal>();
  p.eval = [R, px, qx](const XVec& u) {
    return XVec(R * std::cos(u[0]) * px + R * std::sin(u[0]) * qx);
  };
  p.orient_ref = Eigen::VectorXd::Zero(3);
  p.sample_points = curve_samples();
  p.clip = {std::nullopt};
  return p;
}

ImmersionPatch wavy_curve_patch(double radius, double amplitude) {
  if (!(radius > 0)) throw std::invalid_argument("wavy_curve_patch: radius must be positive");
  ImmersionPatch p;
  p.shape = "wavy_curve";
  p.n = 1;
  p.k = 2;
  const XReal R = radius, A = amplitude;
  p.eval = [R, A](const XVec& u) {
    XVec f(3);
    f << R * std::cos(u[0]), R * std::sin(u[0]), A * std::sin(2 * u[0]);
    return f;
  };
  p.orient_ref = Eigen::VectorXd::Zero(3);
  p.sample_points = curve_samples();
  p.clip = {std::nullopt};
  return p;
}

ImmersionPatch sphere_patch(double radius) { return ellipsoid_patch(radius, radius, radius); }

ImmersionPatch ellipsoid_patch(double a, double b, double c) {
  if (!(a > 0) || !(b > 0) || !(c > 0))
    throw std::invalid_argument("ellipsoid_patch: bad semi-axes");
  ImmersionPatch p;
  p.shape = (a == b && b == c) ? "sphere" : "ellipsoid";
  p.n = 2;
  p.k = 1;
  const XReal ax = a, bx = b, cx = c;
  p.eval = [ax, bx, cx](const XVec& u) {
    XVec f(3);
    f << ax * std::cos(u[0]) * std::sin(u[1]), bx * std::sin(u[0]) * std::sin(u[1]),
        cx * std::cos(u[1]);
    return f;
  };
  p.orient_outward = true;
  p.orient_ref = Eigen::VectorXd::Zero(3);
  p.sample_points = surface_samples();
  p.clip = {std::nullopt, std::array<double, 2>{0.0, M_PI}};
  return p;
}

ImmersionPatch graph_patch(std::vector<GraphMonomial> monomials) {
  for (const auto& m : monomials)
    if (m.px < 0 || m.py < 0) throw std::invalid_argument("graph_patch: negative exponent");
  ImmersionPatch p;
  p.shape = "graph";
  p.n = 2;
  p.k = 1;
  p.eval = [monos = std::move(monomials)](const XVec& u) {
    XReal z = 0;
    for (const auto& m : monos)
      z += static_cast<XReal>(m.coeff) * ipow(u[0], m.px) * ipow(u[1], m.py);
    XVec f(3);
    f << u[0], u[1], z;
    return f;
  };
  p.orient_outward = false;
  p.orient_ref = Eigen::Vector3d::UnitZ();
  {
    std::vector<Eigen::VectorXd> pts;
    const double uv[5][2] = {{0.0, 0.0}, {0.3, -0.2}, {-0.35, 0.22}, {0.1, 0.4}, {-0.2, -0.3}};
    for (auto& q : uv) {
      Eigen::VectorXd u(2);
      u << q[0], q[1];
      pts.push_back(u);
    }
    p.sample_points = pts;
  }
  p.clip = {std::array<double, 2>{-1.0, 1.0}, std::array<double, 2>{-1.0, 1.0}};
  return p;
}

ImmersionPatch plane_patch() {
  ImmersionPatch p = graph_patch({});
  p.shape = "plane";
  return p;
}

ImmersionPatch with_rigid_motion(const ImmersionPatch& p, const Eigen::MatrixXd& Q,
                                 const Eigen::VectorXd& b) {
  const int d = p.ambient();
  if (Q.rows() != d || Q.cols() != d || b.size() != d)
    throw std::invalid_argument("with_rigid_motion: dimension mismatch");
  if ((Q.transpose() * Q - Eigen::MatrixXd::Identity(d, d)).norm() > 1e-10)
    throw std::invalid_argument("with_rigid_motion: Q is not orthogonal");
  ImmersionPatch out = p;
  const XMat Qx = Q.cast<XReal>();
  const XVec bx = b.cast<XReal>();
  out.eval = [base = p.eval, Qx, bx](const XVec& u) { return XVec(Qx * base(u) + bx); };
  if (p.orient_outward)
    out.orient_ref = Q * p.orient_ref + b;
  else
    out.orient_ref = Q * p.orient_ref;
  return out;
}

}  // namespace mcflow
