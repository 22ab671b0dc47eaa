#include "otadapt/monge_ampere.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "otadapt/error.hpp"
#include "otadapt/quadrature.hpp"

namespace otadapt {

double f_rhs(const std::array<double, 4>& H, double q1, double q2, double theta,
             const DensityEvaluator& density) {
  const auto rho = density.eval(q1, q2);
  if (!(rho.rho > 0.0))
    throw DensityEvaluationFailure("f_rhs: non-positive density " +
                                   std::to_string(rho.rho) + " at q = (" +
                                   std::to_string(q1) + ", " + std::to_string(q2) + ")");
  const double sum = H[0] * H[0] + H[1] * H[1] + H[2] * H[2] + H[3] * H[3];
  return std::sqrt(sum + 2.0 * theta / rho.rho);
}

namespace {

struct FaceSide {
  int elem = -1;
  int lface = -1;
  Eigen::MatrixXd phi;  // nqf x Np, volume basis at the face quadrature points
  Eigen::VectorXd n1, n2;  // outward normal for this side
};

struct FaceData {
  std::array<FaceSide, 2> side;
  Eigen::VectorXd w;    // quadrature weight * |x'(t)| (owner geometry)
  Eigen::MatrixXd chi;  // nqf x m, face basis in the owner's parametrization
  Eigen::MatrixXd mf;   // m x m
  int seg = -1;
  int offset = 0;
  std::vector<int> active;  // active segment per quadrature point (boundary)
};

struct ElemData {
  Eigen::PartialPivLU<Eigen::MatrixXd> A_lu;  // 3n x 3n local system
  Eigen::PartialPivLU<Eigen::MatrixXd> M_lu;  // n x n mass (H recovery)
  Eigen::MatrixXd S;                          // 3n x 4m
  Eigen::VectorXd t;                          // 3n (multiplier column response)
  Eigen::VectorXd m_vec;                      // integral of each basis function
  Eigen::MatrixXd Dx, Dy;                     // (phi_j, d phi_i / dx_c)
  Eigen::VectorXd wdet;                       // volume weights * det J
  std::array<int, 4> face_id{-1, -1, -1, -1};
  std::array<int, 4> side_id{0, 0, 0, 0};
  std::array<Eigen::MatrixXd, 4> T;           // m x 3n trace-row extractor
};

struct IterState {
  std::vector<double> q1, q2, u;
  std::array<std::vector<double>, 4> H;  // H11, H12, H21, H22 (grad q layout)
  Eigen::VectorXd u_hat;
  double multiplier = 0.0;
};

}  // namespace

struct MongeAmpereSolver::Impl {
  const Mesh* mesh;
  const BoundaryGeometry* geometry;
  MAParams params;

  int np, nq, m, nqf;
  int n_hat = 0;
  bool has_curved = false;
  std::vector<FaceData> faces;
  std::vector<ElemData> elems;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool factorized = false;

  Impl(const Mesh& msh, const BoundaryGeometry& geom, MAParams prm)
      : mesh(&msh), geometry(&geom), params(prm) {
    const auto& master = mesh->master();
    np = master.node_count();
    nq = master.quad_count();
    m = mesh->degree() + 1;
    nqf = mesh->degree() + 2;
    for (const auto& seg : geometry->segments())
      if (seg.kind == Segment::Kind::circle) has_curved = true;
    build_faces();
    build_elems();
  }

  void build_faces() {
    const auto& master = mesh->master();
    const Rule1D rule = gauss_legendre(nqf);
    faces.resize(mesh->faces().size());
    int offset = 0;
    std::vector<double> v(np), dxi(np), deta(np), chi1(m);

    for (size_t fi = 0; fi < mesh->faces().size(); ++fi) {
      const MeshFace& mf = mesh->faces()[fi];
      FaceData& fd = faces[fi];
      fd.seg = mf.seg;
      fd.offset = offset;
      offset += m;
      fd.w.resize(nqf);
      fd.chi.resize(nqf, m);
      const int sides = mf.boundary() ? 1 : 2;
      for (int s = 0; s < sides; ++s) {
        fd.side[s].elem = s == 0 ? mf.elem_a : mf.elem_b;
        fd.side[s].lface = s == 0 ? mf.face_a : mf.face_b;
        fd.side[s].phi.resize(nqf, np);
        fd.side[s].n1.resize(nqf);
        fd.side[s].n2.resize(nqf);
      }
      // Reference direction of the face parametrization per local face.
      auto ref_dir = [](int f, double& dxi_dt, double& deta_dt) {
        switch (f) {
          case 0: dxi_dt = 1.0; deta_dt = 0.0; break;
          case 1: dxi_dt = 0.0; deta_dt = 1.0; break;
          case 2: dxi_dt = -1.0; deta_dt = 0.0; break;
          default: dxi_dt = 0.0; deta_dt = -1.0; break;
        }
      };
      for (int a = 0; a < nqf; ++a) {
        const double t = rule.nodes[a];
        // Owner side geometry defines weights and the outward normal.
        double xi, eta;
        MasterElement::face_ref_point(mf.face_a, t, xi, eta);
        master.eval_basis_grad(xi, eta, v.data(), dxi.data(), deta.data());
        double tx = 0.0, ty = 0.0;
        double d1, d2;
        ref_dir(mf.face_a, d1, d2);
        const double* xc = mesh->elem_coords(mf.elem_a);
        for (int j = 0; j < np; ++j) {
          tx += xc[2 * j] * (dxi[j] * d1 + deta[j] * d2);
          ty += xc[2 * j + 1] * (dxi[j] * d1 + deta[j] * d2);
        }
        const double len = std::hypot(tx, ty);
        fd.w[a] = rule.weights[a] * len;
        // CCW traversal: outward normal is the tangent rotated by -90 degrees.
        fd.side[0].n1[a] = ty / len;
        fd.side[0].n2[a] = -tx / len;
        for (int j = 0; j < np; ++j) fd.side[0].phi(a, j) = v[j];
        master.eval_basis_1d(t, chi1.data());
        for (int b = 0; b < m; ++b) fd.chi(a, b) = chi1[b];
        if (sides == 2) {
          // Neighbor traverses the shared curve with t -> -t.
          MasterElement::face_ref_point(mf.face_b, -t, xi, eta);
          master.eval_basis(xi, eta, v.data());
          for (int j = 0; j < np; ++j) fd.side[1].phi(a, j) = v[j];
          fd.side[1].n1[a] = -fd.side[0].n1[a];
          fd.side[1].n2[a] = -fd.side[0].n2[a];
        }
      }
      fd.mf = fd.chi.transpose() * fd.w.asDiagonal() * fd.chi;
      if (mf.boundary()) fd.active.assign(nqf, mf.seg);
    }
    n_hat = offset;
  }

  void build_elems() {
    const auto& master = mesh->master();
    elems.resize(mesh->elem_count());

    // Local face lookup.
    for (size_t fi = 0; fi < faces.size(); ++fi)
      for (int s = 0; s < (mesh->faces()[fi].boundary() ? 1 : 2); ++s) {
        ElemData& ed = elems[faces[fi].side[s].elem];
        ed.face_id[faces[fi].side[s].lface] = static_cast<int>(fi);
        ed.side_id[faces[fi].side[s].lface] = s;
      }

    const double tau = params.tau;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      ElemData& ed = elems[e];
      for (int f = 0; f < 4; ++f)
        if (ed.face_id[f] < 0)
          throw InvalidMesh("monge_ampere: element " + std::to_string(e) +
                            " local face " + std::to_string(f) +
                            " has no face record");
      const auto geom = mesh->jacobians(e);
      ed.wdet.resize(nq);
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(np, np);
      ed.Dx = Eigen::MatrixXd::Zero(np, np);
      ed.Dy = Eigen::MatrixXd::Zero(np, np);
      ed.m_vec = Eigen::VectorXd::Zero(np);
      std::vector<double> gx(np), gy(np);
      for (int g = 0; g < nq; ++g) {
        const double w = master.quad_weights()[g] * geom.det_j[g];
        ed.wdet[g] = w;
        for (int j = 0; j < np; ++j) {
          const double dxi = master.dxi_at_quad()(g, j);
          const double deta = master.deta_at_quad()(g, j);
          gx[j] = geom.inv_j(g, 0) * dxi + geom.inv_j(g, 2) * deta;
          gy[j] = geom.inv_j(g, 1) * dxi + geom.inv_j(g, 3) * deta;
        }
        for (int i = 0; i < np; ++i) {
          const double phi_i = master.basis_at_quad()(g, i);
          ed.m_vec[i] += w * phi_i;
          for (int j = 0; j < np; ++j) {
            const double phi_j = master.basis_at_quad()(g, j);
            M(i, j) += w * phi_i * phi_j;
            ed.Dx(i, j) += w * phi_j * gx[i];
            ed.Dy(i, j) += w * phi_j * gy[i];
          }
        }
      }
      ed.M_lu.compute(M);

      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * np, 3 * np);
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3 * np, 4 * m);
      A.block(0, 0, np, np) = M;
      A.block(0, 2 * np, np, np) = ed.Dx;
      A.block(np, np, np, np) = M;
      A.block(np, 2 * np, np, np) = ed.Dy;
      A.block(2 * np, 0, np, np) = ed.Dx;
      A.block(2 * np, np, np, np) = ed.Dy;

      for (int f = 0; f < 4; ++f) {
        const FaceData& fd = faces[ed.face_id[f]];
        const FaceSide& fs = fd.side[ed.side_id[f]];
        const Eigen::MatrixXd wphi = fd.w.asDiagonal() * fs.phi;  // nqf x np
        const Eigen::MatrixXd Ex = fs.phi.transpose() * fs.n1.asDiagonal() * wphi;
        const Eigen::MatrixXd Ey = fs.phi.transpose() * fs.n2.asDiagonal() * wphi;
        const Eigen::MatrixXd Eu = fs.phi.transpose() * wphi;
        const Eigen::MatrixXd Fx = fs.phi.transpose() * fs.n1.asDiagonal() *
                                   fd.w.asDiagonal() * fd.chi;  // np x m
        const Eigen::MatrixXd Fy =
            fs.phi.transpose() * fs.n2.asDiagonal() * fd.w.asDiagonal() * fd.chi;
        const Eigen::MatrixXd G = fs.phi.transpose() * fd.w.asDiagonal() * fd.chi;

        A.block(2 * np, 0, np, np) -= Ex;
        A.block(2 * np, np, np, np) -= Ey;
        A.block(2 * np, 2 * np, np, np) += tau * Eu;
        B.block(0, f * m, np, m) = Fx;
        B.block(np, f * m, np, m) = Fy;
        B.block(2 * np, f * m, np, m) = tau * G;

        ed.T[f].resize(m, 3 * np);
        ed.T[f].block(0, 0, m, np) = Fx.transpose();
        ed.T[f].block(0, np, m, np) = Fy.transpose();
        ed.T[f].block(0, 2 * np, m, np) = -tau * G.transpose();
      }

      ed.A_lu.compute(A);
      ed.S = ed.A_lu.solve(B);
      Eigen::VectorXd rhs_t = Eigen::VectorXd::Zero(3 * np);
      rhs_t.segment(2 * np, np) = -ed.m_vec;
      ed.t = ed.A_lu.solve(rhs_t);
    }
  }

  // Boundary-condition row block for one boundary face given the previous
  // trace values of q at its quadrature points: W = [Bc1, Bc2, -tau G^T].
  Eigen::MatrixXd boundary_rows(const FaceData& fd,
                                const std::vector<std::array<double, 2>>& q_prev) const {
    const FaceSide& fs = fd.side[0];
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, 3 * np);
    for (int a = 0; a < nqf; ++a) {
      const auto grad =
          geometry->segment(fd.active[a]).grad_c(q_prev[a][0], q_prev[a][1]);
      for (int b = 0; b < m; ++b) {
        const double wchi = fd.w[a] * fd.chi(a, b);
        for (int j = 0; j < np; ++j) {
          W(b, j) += wchi * grad[0] * fs.phi(a, j);
          W(b, np + j) += wchi * grad[1] * fs.phi(a, j);
          W(b, 2 * np + j) -= params.tau * wchi * fs.phi(a, j);
        }
      }
    }
    return W;
  }

  Eigen::VectorXd boundary_affine(const FaceData& fd,
                                  const std::vector<std::array<double, 2>>& q_prev) const {
    Eigen::VectorXd av = Eigen::VectorXd::Zero(m);
    for (int a = 0; a < nqf; ++a) {
      const Segment& seg = geometry->segment(fd.active[a]);
      const double cx = q_prev[a][0], cy = q_prev[a][1];
      const auto grad = seg.grad_c(cx, cy);
      const double a_val = seg.c(cx, cy) - grad[0] * cx - grad[1] * cy;
      for (int b = 0; b < m; ++b) av[b] += fd.w[a] * fd.chi(a, b) * a_val;
    }
    return av;
  }

  std::vector<std::array<double, 2>> face_q_values(const FaceData& fd,
                                                   const IterState& state) const {
    const FaceSide& fs = fd.side[0];
    std::vector<std::array<double, 2>> q(nqf);
    for (int a = 0; a < nqf; ++a) {
      double v1 = 0.0, v2 = 0.0;
      for (int j = 0; j < np; ++j) {
        v1 += fs.phi(a, j) * state.q1[fs.elem * np + j];
        v2 += fs.phi(a, j) * state.q2[fs.elem * np + j];
      }
      q[a] = {v1, v2};
    }
    return q;
  }

  void factorize(const IterState& state) {
    std::vector<Eigen::Triplet<double>> triplets;
    const int N = n_hat;
    triplets.reserve(static_cast<size_t>(mesh->elem_count()) * 16 * m * m + 4 * N);

    auto add_block = [&](int row0, const Eigen::MatrixXd& rows, const ElemData& ed) {
      // rows is (m x 3n) applied to x_K = S u_hat + t rho + c.
      const Eigen::MatrixXd coupling = rows * ed.S;     // m x 4m
      const Eigen::VectorXd mult_col = rows * ed.t;     // m
      for (int f = 0; f < 4; ++f) {
        const int col0 = faces[ed.face_id[f]].offset;
        for (int r = 0; r < rows.rows(); ++r)
          for (int b = 0; b < m; ++b)
            triplets.emplace_back(row0 + r, col0 + b, coupling(r, f * m + b));
      }
      for (int r = 0; r < rows.rows(); ++r)
        triplets.emplace_back(row0 + r, N, mult_col[r]);
    };

    for (size_t fi = 0; fi < faces.size(); ++fi) {
      const FaceData& fd = faces[fi];
      const MeshFace& mf = mesh->faces()[fi];
      if (mf.boundary()) {
        const auto q_prev = face_q_values(fd, state);
        const Eigen::MatrixXd W = boundary_rows(fd, q_prev);
        add_block(fd.offset, W, elems[fd.side[0].elem]);
        for (int r = 0; r < m; ++r)
          for (int b = 0; b < m; ++b)
            triplets.emplace_back(fd.offset + r, fd.offset + b,
                                  params.tau * fd.mf(r, b));
      } else {
        for (int s = 0; s < 2; ++s) {
          const ElemData& ed = elems[fd.side[s].elem];
          add_block(fd.offset, ed.T[fd.side[s].lface], ed);
          for (int r = 0; r < m; ++r)
            for (int b = 0; b < m; ++b)
              triplets.emplace_back(fd.offset + r, fd.offset + b,
                                    params.tau * fd.mf(r, b));
        }
      }
    }

    // Zero-mean constraint row over u, plus its multiplier-column response.
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const ElemData& ed = elems[e];
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(3 * np);
      mu.segment(2 * np, np) = ed.m_vec;
      const Eigen::VectorXd h = ed.S.transpose() * mu;  // 4m
      for (int f = 0; f < 4; ++f) {
        const int col0 = faces[ed.face_id[f]].offset;
        for (int b = 0; b < m; ++b)
          triplets.emplace_back(N, col0 + b, h[f * m + b]);
      }
      triplets.emplace_back(N, N, mu.dot(ed.t));
    }

    Eigen::SparseMatrix<double> matrix(N + 1, N + 1);
    matrix.setFromTriplets(triplets.begin(), triplets.end());
    lu.compute(matrix);
    if (lu.info() != Eigen::Success)
      throw SingularSystem("monge_ampere: trace system factorization failed");
    factorized = true;
  }

  // Element integrals of f(H^{l-1}, q^{l-1}) against the basis, solved through
  // the local system: c_K = A^{-1} [0; 0; -b_f].
  std::vector<Eigen::VectorXd> local_constants(const IterState& state,
                                               const DensityEvaluator& density,
                                               double theta) const {
    const auto& master = mesh->master();
    std::vector<Eigen::VectorXd> c(mesh->elem_count());
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const ElemData& ed = elems[e];
      Eigen::VectorXd b_f = Eigen::VectorXd::Zero(np);
      for (int g = 0; g < nq; ++g) {
        double q1 = 0.0, q2 = 0.0;
        std::array<double, 4> H{};
        for (int j = 0; j < np; ++j) {
          const double phi = master.basis_at_quad()(g, j);
          q1 += phi * state.q1[e * np + j];
          q2 += phi * state.q2[e * np + j];
          for (int c4 = 0; c4 < 4; ++c4) H[c4] += phi * state.H[c4][e * np + j];
        }
        const double f_val = f_rhs(H, q1, q2, theta, density);
        for (int i = 0; i < np; ++i)
          b_f[i] += ed.wdet[g] * f_val * master.basis_at_quad()(g, i);
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * np);
      rhs.segment(2 * np, np) = -b_f;
      c[e] = ed.A_lu.solve(rhs);
    }
    return c;
  }

  Eigen::VectorXd assemble_rhs(const IterState& state,
                               const std::vector<Eigen::VectorXd>& c) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_hat + 1);
    for (size_t fi = 0; fi < faces.size(); ++fi) {
      const FaceData& fd = faces[fi];
      const MeshFace& mf = mesh->faces()[fi];
      if (mf.boundary()) {
        const auto q_prev = face_q_values(fd, state);
        const Eigen::MatrixXd W = boundary_rows(fd, q_prev);
        rhs.segment(fd.offset, m) -=
            boundary_affine(fd, q_prev) + W * c[fd.side[0].elem];
      } else {
        for (int s = 0; s < 2; ++s) {
          const ElemData& ed = elems[fd.side[s].elem];
          rhs.segment(fd.offset, m) -= ed.T[fd.side[s].lface] * c[fd.side[s].elem];
        }
      }
    }
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const ElemData& ed = elems[e];
      rhs[n_hat] -= ed.m_vec.dot(c[e].segment(2 * np, np));
    }
    return rhs;
  }

  void reconstruct(const Eigen::VectorXd& y, const std::vector<Eigen::VectorXd>& c,
                   IterState& out) const {
    out.u_hat = y.head(n_hat);
    out.multiplier = y[n_hat];
    out.q1.assign(static_cast<size_t>(mesh->elem_count()) * np, 0.0);
    out.q2.assign(out.q1.size(), 0.0);
    out.u.assign(out.q1.size(), 0.0);
    Eigen::VectorXd u_hat_K(4 * m);
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const ElemData& ed = elems[e];
      for (int f = 0; f < 4; ++f)
        u_hat_K.segment(f * m, m) = y.segment(faces[ed.face_id[f]].offset, m);
      const Eigen::VectorXd x = ed.S * u_hat_K + ed.t * out.multiplier + c[e];
      for (int j = 0; j < np; ++j) {
        out.q1[e * np + j] = x[j];
        out.q2[e * np + j] = x[np + j];
        out.u[e * np + j] = x[2 * np + j];
      }
    }
  }

  void recover_hessian(IterState& state) const {
    for (auto& comp : state.H) comp.assign(state.q1.size(), 0.0);
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const ElemData& ed = elems[e];
      Eigen::VectorXd q1(np), q2(np), u(np);
      for (int j = 0; j < np; ++j) {
        q1[j] = state.q1[e * np + j];
        q2[j] = state.q2[e * np + j];
        u[j] = state.u[e * np + j];
      }
      // Volume parts: -(q_r, dphi_i/dx_c).
      std::array<Eigen::VectorXd, 4> rhs{-(ed.Dx * q1), -(ed.Dy * q1),
                                         -(ed.Dx * q2), -(ed.Dy * q2)};
      for (int f = 0; f < 4; ++f) {
        const FaceData& fd = faces[ed.face_id[f]];
        const FaceSide& fs = fd.side[ed.side_id[f]];
        for (int a = 0; a < nqf; ++a) {
          double q1a = 0.0, q2a = 0.0, ua = 0.0, uhat = 0.0;
          for (int j = 0; j < np; ++j) {
            q1a += fs.phi(a, j) * q1[j];
            q2a += fs.phi(a, j) * q2[j];
            ua += fs.phi(a, j) * u[j];
          }
          for (int b = 0; b < m; ++b)
            uhat += fd.chi(a, b) * state.u_hat[fd.offset + b];
          const double jump = params.tau * (ua - uhat);
          const double qhat1 = q1a - jump * fs.n1[a];
          const double qhat2 = q2a - jump * fs.n2[a];
          for (int i = 0; i < np; ++i) {
            const double wphi = fd.w[a] * fs.phi(a, i);
            rhs[0][i] += wphi * qhat1 * fs.n1[a];
            rhs[1][i] += wphi * qhat1 * fs.n2[a];
            rhs[2][i] += wphi * qhat2 * fs.n1[a];
            rhs[3][i] += wphi * qhat2 * fs.n2[a];
          }
        }
      }
      for (int c4 = 0; c4 < 4; ++c4) {
        const Eigen::VectorXd h = ed.M_lu.solve(rhs[c4]);
        for (int j = 0; j < np; ++j) state.H[c4][e * np + j] = h[j];
      }
    }
  }

  // Relative L2 distance between two q iterates.
  double q_change(const IterState& a, const IterState& b) const {
    const auto& master = mesh->master();
    double num = 0.0, den = 0.0;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const ElemData& ed = elems[e];
      for (int g = 0; g < nq; ++g) {
        double d1 = 0.0, d2 = 0.0, v1 = 0.0, v2 = 0.0;
        for (int j = 0; j < np; ++j) {
          const double phi = master.basis_at_quad()(g, j);
          d1 += phi * (a.q1[e * np + j] - b.q1[e * np + j]);
          d2 += phi * (a.q2[e * np + j] - b.q2[e * np + j]);
          v1 += phi * a.q1[e * np + j];
          v2 += phi * a.q2[e * np + j];
        }
        num += ed.wdet[g] * (d1 * d1 + d2 * d2);
        den += ed.wdet[g] * (v1 * v1 + v2 * v2);
      }
    }
    return std::sqrt(num / std::max(den, 1e-300));
  }

  IterState identity_state() const {
    IterState state;
    const size_t n = static_cast<size_t>(mesh->elem_count()) * np;
    state.q1.resize(n);
    state.q2.resize(n);
    state.u.resize(n);
    for (auto& comp : state.H) comp.assign(n, 0.0);
    for (int e = 0; e < mesh->elem_count(); ++e)
      for (int j = 0; j < np; ++j) {
        const double x = mesh->coord(e, j, 0), y = mesh->coord(e, j, 1);
        state.q1[e * np + j] = x;
        state.q2[e * np + j] = y;
        state.u[e * np + j] = 0.5 * (x * x + y * y);
        state.H[0][e * np + j] = 1.0;
        state.H[3][e * np + j] = 1.0;
      }
    // Traces of the initial potential, so damped first steps blend against a
    // consistent state.
    state.u_hat = Eigen::VectorXd::Zero(n_hat);
    const auto& nodes_1d = mesh->master().nodes_1d();
    std::vector<double> v(np);
    for (size_t fi = 0; fi < faces.size(); ++fi) {
      const FaceData& fd = faces[fi];
      const int e = fd.side[0].elem;
      for (int b = 0; b < m; ++b) {
        double xi, eta;
        MasterElement::face_ref_point(fd.side[0].lface, nodes_1d[b], xi, eta);
        mesh->master().eval_basis(xi, eta, v.data());
        double x = 0.0, y = 0.0;
        const double* xc = mesh->elem_coords(e);
        for (int j = 0; j < np; ++j) {
          x += xc[2 * j] * v[j];
          y += xc[2 * j + 1] * v[j];
        }
        state.u_hat[fd.offset + b] = 0.5 * (x * x + y * y);
      }
    }
    return state;
  }

  void reset_sliding() {
    for (size_t fi = 0; fi < faces.size(); ++fi)
      if (mesh->faces()[fi].boundary())
        faces[fi].active.assign(nqf, mesh->faces()[fi].seg);
    factorized = false;
  }

  // Updates active segments from the current q trace; returns the number of
  // reassignments.
  int update_sliding(const IterState& state) {
    if (!params.sliding) return 0;
    int changes = 0;
    for (size_t fi = 0; fi < faces.size(); ++fi) {
      FaceData& fd = faces[fi];
      if (!mesh->faces()[fi].boundary()) continue;
      const auto q = face_q_values(fd, state);
      for (int a = 0; a < nqf; ++a) {
        const int next = geometry->slide(q[a][0], q[a][1], fd.active[a]);
        if (next != fd.active[a]) {
          fd.active[a] = next;
          ++changes;
        }
      }
    }
    return changes;
  }
};

MongeAmpereSolver::MongeAmpereSolver(const Mesh& mesh,
                                     const BoundaryGeometry& geometry,
                                     MAParams params)
    : impl_(std::make_shared<Impl>(mesh, geometry, params)) {}

int MongeAmpereSolver::trace_dof_count() const { return impl_->n_hat; }
int MongeAmpereSolver::system_dimension() const { return impl_->n_hat + 1; }

MASolution MongeAmpereSolver::solve(const DensityEvaluator& density, double theta) {
  Impl& s = *impl_;
  const Mesh& mesh = *s.mesh;
  const MAParams& params = s.params;
  density.reset_clamp_count();
  s.reset_sliding();

  IterState prev = s.identity_state();
  IterState current = prev;
  std::vector<double> history;
  int slide_events = 0;
  bool converged = false;
  int iterations = 0;

  for (int l = 1; l <= params.max_fp; ++l) {
    const int changes = s.update_sliding(prev);
    slide_events += changes;
    if (!s.factorized || changes > 0 || s.has_curved) s.factorize(prev);

    const auto c = s.local_constants(prev, density, theta);
    const Eigen::VectorXd rhs = s.assemble_rhs(prev, c);
    Eigen::VectorXd y = s.lu.solve(rhs);
    if (s.lu.info() != Eigen::Success || !y.allFinite())
      throw SingularSystem("monge_ampere: trace solve failed at iteration " +
                           std::to_string(l));

    s.reconstruct(y, c, current);
    if (params.omega != 1.0) {
      for (size_t i = 0; i < current.q1.size(); ++i) {
        current.q1[i] = (1.0 - params.omega) * prev.q1[i] + params.omega * current.q1[i];
        current.q2[i] = (1.0 - params.omega) * prev.q2[i] + params.omega * current.q2[i];
        current.u[i] = (1.0 - params.omega) * prev.u[i] + params.omega * current.u[i];
      }
      current.u_hat = (1.0 - params.omega) * prev.u_hat + params.omega * current.u_hat;
    }
    s.recover_hessian(current);

    const double residual = s.q_change(current, prev);
    history.push_back(residual);
    iterations = l;
    if (!std::isfinite(residual))
      throw SingularSystem("monge_ampere: diverged at iteration " + std::to_string(l));
    std::swap(prev, current);
    if (residual <= params.tol_fp) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw MaxIterations("monge_ampere: no convergence in " +
                            std::to_string(params.max_fp) + " iterations",
                        history);

  // Package the accepted iterate (prev after the final swap).
  const IterState& fin = prev;
  MASolution sol(mesh);
  sol.u.coeffs() = fin.u;
  sol.q1.coeffs() = fin.q1;
  sol.q2.coeffs() = fin.q2;
  for (int c4 = 0; c4 < 4; ++c4) sol.H[c4].coeffs() = fin.H[c4];
  sol.u_hat = fin.u_hat;
  sol.mean_multiplier = fin.multiplier;
  sol.iterations = iterations;
  sol.residual_history = history;
  sol.clamp_count = density.clamp_count();
  sol.slide_events = slide_events;

  // Diagnostics: convexity, boundary condition, zero mean, MA residual.
  const auto& master = mesh.master();
  double min_det = std::numeric_limits<double>::max();
  double ma_num = 0.0, area = 0.0;
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const ElemData& ed = s.elems[e];
    for (int g = 0; g < s.nq; ++g) {
      std::array<double, 4> H{};
      double q1 = 0.0, q2 = 0.0;
      for (int j = 0; j < s.np; ++j) {
        const double phi = master.basis_at_quad()(g, j);
        for (int c4 = 0; c4 < 4; ++c4) H[c4] += phi * fin.H[c4][e * s.np + j];
        q1 += phi * fin.q1[e * s.np + j];
        q2 += phi * fin.q2[e * s.np + j];
      }
      const double det = H[0] * H[3] - H[1] * H[2];
      min_det = std::min(min_det, det);
      const auto rho = density.eval(q1, q2);
      const double r = rho.rho * det - theta;
      ma_num += ed.wdet[g] * r * r;
      area += ed.wdet[g];
    }
  }
  sol.min_det_H = min_det;
  sol.ma_residual = std::sqrt(ma_num / area) / theta;
  double mean_u = 0.0;
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < s.np; ++j)
      mean_u += s.elems[e].m_vec[j] * fin.u[e * s.np + j];
  sol.mean_u = std::abs(mean_u);

  double max_c = 0.0;
  for (size_t fi = 0; fi < s.faces.size(); ++fi) {
    const FaceData& fd = s.faces[fi];
    if (!mesh.faces()[fi].boundary()) continue;
    const auto q = s.face_q_values(fd, fin);
    std::map<int, int> votes;
    for (int a = 0; a < s.nqf; ++a) {
      max_c = std::max(max_c, std::abs(s.geometry->segment(fd.active[a])
                                           .c(q[a][0], q[a][1])));
      votes[fd.active[a]]++;
    }
    int seg = fd.active[0], best = 0;
    for (auto [sid, count] : votes)
      if (count > best) {
        best = count;
        seg = sid;
      }
    sol.face_active_segment[static_cast<int>(fi)] = seg;
  }
  sol.max_boundary_c = max_c;
  sol.clamp_count = density.clamp_count();
  return sol;
}

Eigen::VectorXd MongeAmpereSolver::single_step_condensed(
    const DensityEvaluator& density, double theta) const {
  Impl& s = *impl_;
  IterState prev = s.identity_state();
  s.factorize(prev);
  const auto c = s.local_constants(prev, density, theta);
  Eigen::VectorXd y = s.lu.solve(s.assemble_rhs(prev, c));
  if (s.lu.info() != Eigen::Success)
    throw SingularSystem("monge_ampere: condensed single-step solve failed");
  return y;
}

Eigen::VectorXd MongeAmpereSolver::single_step_monolithic(
    const DensityEvaluator& density, double theta) const {
  Impl& s = *impl_;
  const Mesh& mesh = *s.mesh;
  const int np = s.np, m = s.m;
  IterState prev = s.identity_state();
  const auto c = s.local_constants(prev, density, theta);

  const int n_local = mesh.elem_count() * 3 * np;
  const int total = n_local + s.n_hat + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(total, total);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(total);

  for (int e = 0; e < mesh.elem_count(); ++e) {
    const ElemData& ed = s.elems[e];
    const int r0 = e * 3 * np;
    // Re-expand the stored local pieces: A_K x + [0;0;m] rho - B u_hat = [0;0;-b_f].
    const Eigen::MatrixXd A_K = ed.A_lu.reconstructedMatrix();
    A.block(r0, r0, 3 * np, 3 * np) = A_K;
    for (int f = 0; f < 4; ++f) {
      const int col0 = n_local + s.faces[ed.face_id[f]].offset;
      // B = A_K * S restricted to this face block.
      const Eigen::MatrixXd B_f = A_K * ed.S.block(0, f * m, 3 * np, m);
      A.block(r0, col0, 3 * np, m) -= B_f;
    }
    A.block(r0 + 2 * np, total - 1, np, 1) = ed.m_vec;
    rhs.segment(r0, 3 * np) = A_K * c[e];
  }

  for (size_t fi = 0; fi < s.faces.size(); ++fi) {
    const FaceData& fd = s.faces[fi];
    const MeshFace& mf = mesh.faces()[fi];
    const int row0 = n_local + fd.offset;
    if (mf.boundary()) {
      const auto q_prev = s.face_q_values(fd, prev);
      const Eigen::MatrixXd W = s.boundary_rows(fd, q_prev);
      A.block(row0, fd.side[0].elem * 3 * np, m, 3 * np) += W;
      A.block(row0, row0, m, m) += s.params.tau * fd.mf;
      rhs.segment(row0, m) -= s.boundary_affine(fd, q_prev);
    } else {
      for (int sd = 0; sd < 2; ++sd) {
        const ElemData& ed = s.elems[fd.side[sd].elem];
        A.block(row0, fd.side[sd].elem * 3 * np, m, 3 * np) +=
            ed.T[fd.side[sd].lface];
        A.block(row0, row0, m, m) += s.params.tau * fd.mf;
      }
    }
  }
  for (int e = 0; e < mesh.elem_count(); ++e)
    A.block(total - 1, e * 3 * np + 2 * np, 1, np) =
        s.elems[e].m_vec.transpose();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw SingularSystem("monge_ampere: monolithic system is singular");
  const Eigen::VectorXd x = lu.solve(rhs);
  return x.tail(s.n_hat + 1);
}

// ---------------------------------------------------------------------------
// Adapted-mesh extraction and corner handling
// ---------------------------------------------------------------------------

Mesh extract_adapted_mesh(const Mesh& mesh, const MASolution& solution,
                          const BoundaryGeometry& geometry,
                          double* max_duplicate_spread) {
  const int np = mesh.nodes_per_elem();
  std::vector<double> coords(mesh.coords().size());
  double spread = 0.0;

  std::vector<std::array<double, 2>> class_pos(mesh.class_count());
  for (int c = 0; c < mesh.class_count(); ++c) {
    const auto& members = mesh.class_members(c);
    double sx = 0.0, sy = 0.0;
    for (auto [e, j] : members) {
      sx += solution.q1.at(e, j);
      sy += solution.q2.at(e, j);
    }
    sx /= members.size();
    sy /= members.size();
    for (auto [e, j] : members)
      spread = std::max(spread, std::hypot(solution.q1.at(e, j) - sx,
                                           solution.q2.at(e, j) - sy));
    class_pos[c] = {sx, sy};
  }

  // Candidate segments per boundary class: active segments of its faces plus
  // their corner neighbors.
  std::vector<std::set<int>> candidates(mesh.class_count());
  for (size_t fi = 0; fi < mesh.faces().size(); ++fi) {
    const MeshFace& face = mesh.faces()[fi];
    if (!face.boundary()) continue;
    int seg = face.seg;
    auto it = solution.face_active_segment.find(static_cast<int>(fi));
    if (it != solution.face_active_segment.end()) seg = it->second;
    for (int j : mesh.master().face_nodes(face.face_a)) {
      auto& set = candidates[mesh.node_class(face.elem_a, j)];
      set.insert(seg);
      for (bool end : {false, true}) {
        const int nb = geometry.neighbor(seg, end);
        if (nb >= 0) set.insert(nb);
      }
    }
  }
  for (int c = 0; c < mesh.class_count(); ++c) {
    if (candidates[c].empty()) continue;
    double best_d = std::numeric_limits<double>::max();
    std::array<double, 2> best = class_pos[c];
    for (int seg : candidates[c]) {
      const auto p = geometry.segment(seg).project(class_pos[c][0], class_pos[c][1]);
      const double d = std::hypot(p[0] - class_pos[c][0], p[1] - class_pos[c][1]);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    class_pos[c] = best;
  }

  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < np; ++j) {
      const auto& p = class_pos[mesh.node_class(e, j)];
      coords[(e * np + j) * 2] = p[0];
      coords[(e * np + j) * 2 + 1] = p[1];
    }

  if (max_duplicate_spread) *max_duplicate_spread = spread;

  Mesh adapted = mesh.with_coords(std::move(coords));
  std::vector<int> tangled;
  for (int e = 0; e < adapted.elem_count(); ++e)
    if (adapted.jacobians(e).det_j.minCoeff() <= 0.0) tangled.push_back(e);
  if (!tangled.empty())
    throw InvalidAdaptedMesh("extract_adapted_mesh: " +
                                 std::to_string(tangled.size()) +
                                 " tangled elements (first: " +
                                 std::to_string(tangled.front()) + ")",
                             tangled);
  return adapted;
}

namespace {

// Nodes of a boundary face ordered along the edge; first/last are vertices.
std::vector<int> boundary_chain(const Mesh& mesh, const MeshFace& face) {
  return mesh.master().face_nodes(face.face_a);
}

void redistribute_edge(std::vector<double>& coords, const Mesh& mesh,
                       const MeshFace& face, const BoundaryGeometry& geometry) {
  const auto& chain = boundary_chain(mesh, face);
  const int np = mesh.nodes_per_elem();
  const int e = face.elem_a;
  const int last = static_cast<int>(chain.size()) - 1;
  const double x0 = coords[(e * np + chain[0]) * 2];
  const double y0 = coords[(e * np + chain[0]) * 2 + 1];
  const double x1 = coords[(e * np + chain[last]) * 2];
  const double y1 = coords[(e * np + chain[last]) * 2 + 1];

  // The edge lies on the segment closest to both endpoints.
  int seg = 0;
  double best = std::numeric_limits<double>::max();
  for (int i = 0; i < geometry.segment_count(); ++i) {
    const double d =
        geometry.segment(i).distance(x0, y0) + geometry.segment(i).distance(x1, y1);
    if (d < best) {
      best = d;
      seg = i;
    }
  }
  const Segment& segment = geometry.segment(seg);
  const auto& nodes_1d = mesh.master().nodes_1d();
  if (segment.kind == Segment::Kind::circle && segment.full_circle) {
    // Interpolate along the shorter arc between the endpoints.
    const double pi = std::acos(-1.0);
    const double th0 = std::atan2(y0 - segment.cy, x0 - segment.cx);
    double th1 = std::atan2(y1 - segment.cy, x1 - segment.cx);
    if (th1 - th0 > pi) th1 -= 2.0 * pi;
    if (th0 - th1 > pi) th1 += 2.0 * pi;
    for (int i = 1; i < last; ++i) {
      const double s = 0.5 * (nodes_1d[i] + 1.0);
      const double theta = th0 + s * (th1 - th0);
      coords[(e * np + chain[i]) * 2] = segment.cx + segment.radius * std::cos(theta);
      coords[(e * np + chain[i]) * 2 + 1] =
          segment.cy + segment.radius * std::sin(theta);
    }
    return;
  }
  const double t0 = segment.param(x0, y0);
  const double t1 = segment.param(x1, y1);
  for (int i = 1; i < last; ++i) {
    const double s = 0.5 * (nodes_1d[i] + 1.0);
    const auto p = segment.point_at(t0 + s * (t1 - t0));
    coords[(e * np + chain[i]) * 2] = p[0];
    coords[(e * np + chain[i]) * 2 + 1] = p[1];
  }
}

}  // namespace

Mesh corner_fix(const Mesh& mesh, const BoundaryGeometry& geometry) {
  std::vector<double> coords = mesh.coords();
  const int np = mesh.nodes_per_elem();
  const double snap_tol = 1e-12 * mesh.diameter();

  for (const Corner& corner : geometry.corners()) {
    // Boundary face whose edge passes closest to the corner.
    int best_face = -1;
    double best_d = std::numeric_limits<double>::max();
    for (size_t fi = 0; fi < mesh.faces().size(); ++fi) {
      const MeshFace& face = mesh.faces()[fi];
      if (!face.boundary()) continue;
      const auto& chain = boundary_chain(mesh, face);
      for (int j : chain) {
        const double d = std::hypot(coords[(face.elem_a * np + j) * 2] - corner.x,
                                    coords[(face.elem_a * np + j) * 2 + 1] - corner.y);
        if (d < best_d) {
          best_d = d;
          best_face = static_cast<int>(fi);
        }
      }
    }
    if (best_face < 0) continue;
    const MeshFace& face = mesh.faces()[best_face];
    const auto& chain = boundary_chain(mesh, face);
    const int last = static_cast<int>(chain.size()) - 1;
    // Closest endpoint vertex of that element's edge.
    double d_first =
        std::hypot(coords[(face.elem_a * np + chain[0]) * 2] - corner.x,
                   coords[(face.elem_a * np + chain[0]) * 2 + 1] - corner.y);
    double d_last =
        std::hypot(coords[(face.elem_a * np + chain[last]) * 2] - corner.x,
                   coords[(face.elem_a * np + chain[last]) * 2 + 1] - corner.y);
    const int vertex_node = d_first <= d_last ? chain[0] : chain[last];
    if (std::min(d_first, d_last) <= snap_tol) continue;  // already at the corner

    // Move every duplicate of the vertex.
    const int cls = mesh.node_class(face.elem_a, vertex_node);
    for (auto [e, j] : mesh.class_members(cls)) {
      coords[(e * np + j) * 2] = corner.x;
      coords[(e * np + j) * 2 + 1] = corner.y;
    }
    // Redistribute the high-order nodes of every boundary edge touching the
    // moved vertex.
    for (size_t fi = 0; fi < mesh.faces().size(); ++fi) {
      const MeshFace& other = mesh.faces()[fi];
      if (!other.boundary()) continue;
      const auto& ch = boundary_chain(mesh, other);
      const int cls0 = mesh.node_class(other.elem_a, ch.front());
      const int cls1 = mesh.node_class(other.elem_a, ch.back());
      if (cls0 == cls || cls1 == cls) redistribute_edge(coords, mesh, other, geometry);
    }
  }

  Mesh fixed = mesh.with_coords(std::move(coords));
  std::vector<int> tangled;
  for (int e = 0; e < fixed.elem_count(); ++e)
    if (fixed.jacobians(e).det_j.minCoeff() <= 0.0) tangled.push_back(e);
  if (!tangled.empty())
    throw InvalidAdaptedMesh("corner_fix: " + std::to_string(tangled.size()) +
                                 " tangled elements after snapping",
                             tangled);
  return fixed;
}

double max_boundary_distance(const Mesh& mesh, const BoundaryGeometry& geometry) {
  double worst = 0.0;
  for (const auto& face : mesh.faces()) {
    if (!face.boundary()) continue;
    for (int j : mesh.master().face_nodes(face.face_a)) {
      const double x = mesh.coord(face.elem_a, j, 0);
      const double y = mesh.coord(face.elem_a, j, 1);
      double d = std::numeric_limits<double>::max();
      for (int s = 0; s < geometry.segment_count(); ++s)
        d = std::min(d, geometry.segment(s).distance(x, y));
      worst = std::max(worst, d);
    }
  }
  return worst;
}

double equidistribution_deviation(const Mesh& mesh, const MASolution& solution,
                                  const DensityEvaluator& density, double theta) {
  const auto& master = mesh.master();
  const int np = mesh.nodes_per_elem();
  double worst = 0.0;
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const auto geom = mesh.jacobians(e);
    double mapped_mass = 0.0, volume = 0.0;
    for (int g = 0; g < master.quad_count(); ++g) {
      double q1 = 0.0, q2 = 0.0;
      double g11 = 0.0, g12 = 0.0, g21 = 0.0, g22 = 0.0;  // grad q (reference)
      for (int j = 0; j < np; ++j) {
        const double phi = master.basis_at_quad()(g, j);
        const double dxi = master.dxi_at_quad()(g, j);
        const double deta = master.deta_at_quad()(g, j);
        q1 += phi * solution.q1.at(e, j);
        q2 += phi * solution.q2.at(e, j);
        g11 += dxi * solution.q1.at(e, j);
        g12 += deta * solution.q1.at(e, j);
        g21 += dxi * solution.q2.at(e, j);
        g22 += deta * solution.q2.at(e, j);
      }
      // Physical gradient of q: dq/dx = dq/dxi * dxi/dx.
      const double i11 = geom.inv_j(g, 0), i12 = geom.inv_j(g, 1);
      const double i21 = geom.inv_j(g, 2), i22 = geom.inv_j(g, 3);
      const double a11 = g11 * i11 + g12 * i21;
      const double a12 = g11 * i12 + g12 * i22;
      const double a21 = g21 * i11 + g22 * i21;
      const double a22 = g21 * i12 + g22 * i22;
      const double det_grad_q = a11 * a22 - a12 * a21;
      const double w = master.quad_weights()[g] * geom.det_j[g];
      mapped_mass += w * density.eval(q1, q2).rho * det_grad_q;
      volume += w;
    }
    worst = std::max(worst, std::abs(mapped_mass - theta * volume) /
                                (theta * volume));
  }
  return worst;
}

}  // namespace otadapt
