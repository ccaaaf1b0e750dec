#include "spdekit/flow.hpp"

#include "spdekit/errors.hpp"
#include "spdekit/linalg.hpp"
#include "spdekit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

namespace spdekit {

// ---------------------------------------------------------------------------
// FlowSnapshot
// ---------------------------------------------------------------------------

void FlowSnapshot::eval_X(const double* x, double* out) const {
    const long total = spec.total();
    for (int c = 0; c < dim; ++c)
        out[c] = x[c] + interp_cubic_raw(spec, disp.data() + static_cast<std::size_t>(c) * total, x);
}

void FlowSnapshot::eval_DX(const double* x, double* out) const {
    const long total = spec.total();
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
            out[r * dim + c] =
                (r == c ? 1.0 : 0.0) +
                interp_cubic_raw(spec, dxmi.data() + static_cast<std::size_t>(r * dim + c) * total, x);
}

double FlowSnapshot::min_det_direct() const {
    double m = det_direct.empty() ? 0.0 : det_direct[0];
    for (double v : det_direct) m = std::min(m, v);
    return m;
}

double FlowSnapshot::min_det_formula() const {
    double m = det_formula.empty() ? 0.0 : det_formula[0];
    for (double v : det_formula) m = std::min(m, v);
    return m;
}

double FlowSnapshot::min_singular_value() const {
    const long total = spec.total();
    double dx[16], gram[16], eig[4];
    double best = -1.0;
    for (long i = 0; i < total; ++i) {
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c)
                dx[r * dim + c] = (r == c ? 1.0 : 0.0) +
                                  dxmi[static_cast<std::size_t>(r * dim + c) * total +
                                       static_cast<std::size_t>(i)];
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) {
                double s = 0.0;
                for (int k = 0; k < dim; ++k) s += dx[k * dim + r] * dx[k * dim + c];
                gram[r * dim + c] = s;
            }
        sym_eigenvalues(gram, dim, eig);
        double sv = eig[0] > 0.0 ? std::sqrt(eig[0]) : 0.0;
        if (best < 0.0 || sv < best) best = sv;
    }
    return best;
}

// ---------------------------------------------------------------------------
// FlowInverter
// ---------------------------------------------------------------------------

FlowInverter::FlowInverter(const FlowSnapshot& snap, double tol, int max_iter)
    : snap_(snap), tol_(tol), max_iter_(max_iter) {
    if (snap.min_det_direct() <= 1e-10)
        throw NumericalError("flow inversion: det DX fell below 1e-10 on the lattice");

    const GridSpec& spec = snap.spec;
    const long total = spec.total();
    const int d = snap.dim;
    seed_of_cell_.assign(static_cast<std::size_t>(total), -1);
    std::vector<double> dist(static_cast<std::size_t>(total), 1e300);

    // Scatter: each lattice preimage claims the cell its image lands in.
    double x[kMaxDim], y[kMaxDim], cc[kMaxDim];
    int idx[kMaxDim];
    for (long i = 0; i < total; ++i) {
        spec.node_coords(i, x);
        for (int c = 0; c < d; ++c)
            y[c] = x[c] + snap.disp[static_cast<std::size_t>(c) * total + static_cast<std::size_t>(i)];
        long cell = 0;
        bool inside = true;
        for (int c = 0; c < d; ++c) {
            double s = (y[c] - spec.lo) / spec.h();
            int j = static_cast<int>(std::floor(s + 0.5));
            if (j < 0 || j >= spec.n) {
                j = ((j % spec.n) + spec.n) % spec.n;
                inside = false;
            }
            idx[c] = j;
        }
        (void)inside;
        cell = spec.index(idx);
        for (int c = 0; c < d; ++c) cc[c] = spec.coord(idx[c]);
        double dd = 0.0;
        for (int c = 0; c < d; ++c) dd += (y[c] - cc[c]) * (y[c] - cc[c]);
        if (dd < dist[static_cast<std::size_t>(cell)]) {
            dist[static_cast<std::size_t>(cell)] = dd;
            seed_of_cell_[static_cast<std::size_t>(cell)] = i;
        }
    }
    // Dilate seeds into unclaimed cells.
    std::vector<long> frontier;
    for (long c = 0; c < total; ++c)
        if (seed_of_cell_[static_cast<std::size_t>(c)] >= 0) frontier.push_back(c);
    while (!frontier.empty()) {
        std::vector<long> next;
        for (long cell : frontier) {
            spec.unpack(cell, idx);
            for (int a = 0; a < d; ++a) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    int save = idx[a];
                    idx[a] = (idx[a] + dir + spec.n) % spec.n;
                    long nb = spec.index(idx);
                    idx[a] = save;
                    if (seed_of_cell_[static_cast<std::size_t>(nb)] < 0) {
                        seed_of_cell_[static_cast<std::size_t>(nb)] =
                            seed_of_cell_[static_cast<std::size_t>(cell)];
                        next.push_back(nb);
                    }
                }
            }
        }
        frontier.swap(next);
    }
}

void FlowInverter::invert(const double* y, double* x_out) const {
    const int d = snap_.dim;
    double ynorm = 0.0;
    for (int c = 0; c < d; ++c) ynorm += y[c] * y[c];
    ynorm = std::sqrt(ynorm);
    if (snap_.rcut > 0.0 && ynorm >= snap_.rcut) {
        for (int c = 0; c < d; ++c) x_out[c] = y[c];
        return;
    }

    const GridSpec& spec = snap_.spec;
    int idx[kMaxDim];
    for (int c = 0; c < d; ++c) {
        double s = (y[c] - spec.lo) / spec.h();
        int j = static_cast<int>(std::floor(s + 0.5));
        idx[c] = ((j % spec.n) + spec.n) % spec.n;
    }
    long seed = seed_of_cell_[static_cast<std::size_t>(spec.index(idx))];
    double x[kMaxDim];
    spec.node_coords(seed, x);

    double fx[kMaxDim], dx[16], step[kMaxDim], xtry[kMaxDim], ftry[kMaxDim];
    double tol = tol_ * (1.0 + ynorm);
    double best = 1e300;
    auto residual = [&](const double* p, double* f) {
        double xv[kMaxDim];
        snap_.eval_X(p, xv);
        double r = 0.0;
        for (int c = 0; c < d; ++c) {
            f[c] = xv[c] - y[c];
            r += f[c] * f[c];
        }
        return std::sqrt(r);
    };
    double r = residual(x, fx);
    for (int it = 0; it < max_iter_; ++it) {
        if (r <= tol) {
            for (int c = 0; c < d; ++c) x_out[c] = x[c];
            return;
        }
        best = std::min(best, r);
        snap_.eval_DX(x, dx);
        solve_small(dx, fx, step, d);
        double lambda = 1.0;
        double rtry = 0.0;
        int halvings = 0;
        for (;;) {
            for (int c = 0; c < d; ++c) xtry[c] = x[c] - lambda * step[c];
            rtry = residual(xtry, ftry);
            if (rtry < r || halvings >= 30) break;
            lambda *= 0.5;
            ++halvings;
        }
        for (int c = 0; c < d; ++c) {
            x[c] = xtry[c];
            fx[c] = ftry[c];
        }
        r = rtry;
    }
    if (r <= tol) {
        for (int c = 0; c < d; ++c) x_out[c] = x[c];
        return;
    }
    throw NumericalError("flow inversion stagnated; best residual " + std::to_string(std::min(best, r)));
}

double FlowInverter::rho(const double* y) const {
    const int d = snap_.dim;
    double x[kMaxDim], dx[16];
    invert(y, x);
    snap_.eval_DX(x, dx);
    double det = det_small(dx, d);
    if (det <= 1e-10) throw NumericalError("rho: nonpositive Jacobian determinant at inverse point");
    return 1.0 / det;
}

// ---------------------------------------------------------------------------
// FlowIntegrator
// ---------------------------------------------------------------------------

FlowIntegrator::FlowIntegrator(const VectorFieldSet& set, const BrownianPath& path,
                               std::vector<double> points, int start_step)
    : path_(std::make_shared<BrownianPath>(path)) {
    init(set, std::move(points));
    if (start_step < 0 || start_step > path.steps())
        throw ValidationError("flow: start step outside the path");
    m_ = start_step;
}

FlowIntegrator::FlowIntegrator(const VectorFieldSet& set, const BrownianPath& path,
                               const GridSpec& spec)
    : path_(std::make_shared<BrownianPath>(path)), has_spec_(true), spec_(spec) {
    std::vector<double> pts(static_cast<std::size_t>(spec.total()) * spec.dim);
    double x[kMaxDim];
    for (long i = 0; i < spec.total(); ++i) {
        spec.node_coords(i, x);
        for (int c = 0; c < spec.dim; ++c) pts[static_cast<std::size_t>(i) * spec.dim + c] = x[c];
    }
    init(set, std::move(pts));
}

void FlowIntegrator::init(const VectorFieldSet& set, std::vector<double> points) {
    set_ = &set;
    d_ = set.d;
    d1_ = set.d1;
    cutoff_ = set.cutoff_enabled;
    r0_ = set.R0;
    rcut_ = set.Rcut;
    if (path_->d1() != d1_) throw ValidationError("flow: path d1 does not match field set d1");
    npts_ = static_cast<long>(points.size()) / d_;
    if (points.empty() || static_cast<long>(points.size()) != npts_ * d_)
        throw ValidationError("flow: point array size must be a multiple of d");
    X_ = std::move(points);
    DX_.assign(static_cast<std::size_t>(npts_) * d_ * d_, 0.0);
    for (long i = 0; i < npts_; ++i)
        for (int c = 0; c < d_; ++c) DX_[static_cast<std::size_t>(i) * d_ * d_ + c * d_ + c] = 1.0;
    I_.assign(static_cast<std::size_t>(npts_), 0.0);
    J_.assign(static_cast<std::size_t>(npts_), 0.0);
    for (int k = 0; k <= d1_; ++k) drive_.push_back(set.sigma_exprs[static_cast<std::size_t>(k)]);
}

namespace {

/// Per-thread scratch for one point-step evaluation.
struct FlowWork {
    std::vector<double> jets;   // (d1+1) x d component jets, order-2 table stride
    std::vector<double> zeta;   // order-2 cutoff jet
    std::vector<double> work;   // cutoff + mul scratch
    std::vector<double> raw;    // raw component jet
    std::vector<double> b, db, dxnew;
};

} // namespace

void FlowIntegrator::step() {
    if (m_ >= path_->steps()) throw NumericalError("flow: stepped past the end of the path");
    const double t = m_ * path_->dt();
    const double dt = path_->dt();
    const int d = d_;
    const int d1 = d1_;
    const MultiIndexTable& tab2 = MultiIndexTable::get(d, 2);
    const int n2 = tab2.size();

    // degree-1 entries sit at 1..d; precompute second-derivative indices
    int ee[kMaxDim][kMaxDim];
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
            MultiIndex e{};
            e[j] = static_cast<std::uint8_t>(e[j] + 1);
            e[l] = static_cast<std::uint8_t>(e[l] + 1);
            ee[j][l] = tab2.index_of(e);
        }

    const double* dw = nullptr;
    std::vector<double> dwv(static_cast<std::size_t>(d1));
    for (int k = 0; k < d1; ++k) dwv[static_cast<std::size_t>(k)] = path_->dw(m_, k);
    dw = dwv.data();

    std::atomic<bool> blowup{false};

    parallel_for(static_cast<std::size_t>(npts_), [&](std::size_t i0, std::size_t i1) {
        FlowWork w;
        w.jets.assign(static_cast<std::size_t>((d1 + 1) * d * n2), 0.0);
        w.zeta.assign(static_cast<std::size_t>(n2), 0.0);
        w.work.assign(static_cast<std::size_t>(7 * n2 + 8), 0.0);
        w.raw.assign(static_cast<std::size_t>(n2), 0.0);
        w.b.assign(static_cast<std::size_t>(d), 0.0);
        w.db.assign(static_cast<std::size_t>(d * d), 0.0);
        w.dxnew.assign(static_cast<std::size_t>(d * d), 0.0);

        for (std::size_t i = i0; i < i1; ++i) {
            double* X = X_.data() + i * static_cast<std::size_t>(d);
            double* DX = DX_.data() + i * static_cast<std::size_t>(d * d);

            // jets of the (cutoff) driving fields at the current position
            int region = +1;
            if (cutoff_) region = cutoff_jet_into(tab2, X, r0_, rcut_, w.zeta.data(), w.work.data());
            for (int k = 0; k <= d1; ++k) {
                for (int c = 0; c < d; ++c) {
                    double* out = w.jets.data() + static_cast<std::size_t>((k * d + c) * n2);
                    if (cutoff_ && region < 0) {
                        std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(n2));
                        continue;
                    }
                    const ExprTree& tree = drive_[static_cast<std::size_t>(k)]
                                               [static_cast<std::size_t>(c)].at_time(t);
                    if (cutoff_ && region == 0) {
                        tree.eval_jet_into(t, X, 2, w.raw.data());
                        jetk::mul(tab2, w.raw.data(), w.zeta.data(), out);
                    } else {
                        tree.eval_jet_into(t, X, 2, out);
                    }
                }
            }

            auto jet = [&](int k, int c) {
                return w.jets.data() + static_cast<std::size_t>((k * d + c) * n2);
            };

            // b = sigma^0 - 1/2 sum_k (D sigma^k) sigma^k and its Jacobian
            for (int c = 0; c < d; ++c) {
                double acc = jet(0, c)[0];
                for (int k = 1; k <= d1; ++k)
                    for (int j = 0; j < d; ++j) acc -= 0.5 * jet(k, c)[1 + j] * jet(k, j)[0];
                w.b[static_cast<std::size_t>(c)] = acc;
            }
            for (int c = 0; c < d; ++c) {
                for (int l = 0; l < d; ++l) {
                    double acc = jet(0, c)[1 + l];
                    for (int k = 1; k <= d1; ++k)
                        for (int j = 0; j < d; ++j)
                            acc -= 0.5 * (jet(k, c)[ee[j][l]] * jet(k, j)[0] +
                                          jet(k, c)[1 + j] * jet(k, j)[1 + l]);
                    w.db[static_cast<std::size_t>(c * d + l)] = acc;
                }
            }

            // X update (note the minus signs of the characteristic equation)
            for (int c = 0; c < d; ++c) {
                double dxc = -w.b[static_cast<std::size_t>(c)] * dt;
                for (int k = 1; k <= d1; ++k) dxc -= jet(k, c)[0] * dw[k - 1];
                X[c] += dxc;
                if (!std::isfinite(X[c])) blowup = true;
            }

            // DX update: DX <- DX - sum_k Dsigma^k DX dw - Db DX dt
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) {
                    double acc = DX[r * d + c];
                    for (int j = 0; j < d; ++j) {
                        double coef = w.db[static_cast<std::size_t>(r * d + j)] * dt;
                        for (int k = 1; k <= d1; ++k)
                            coef += jet(k, r)[1 + j] * dw[k - 1];
                        acc -= coef * DX[j * d + c];
                    }
                    w.dxnew[static_cast<std::size_t>(r * d + c)] = acc;
                }
            }
            std::memcpy(DX, w.dxnew.data(), sizeof(double) * static_cast<std::size_t>(d * d));

            // I += tr Dsigma^k dw^k ; J += [tr Db + 1/2 sum tr((Dsigma^k)^2)] dt
            double dI = 0.0;
            for (int k = 1; k <= d1; ++k) {
                double tr = 0.0;
                for (int c = 0; c < d; ++c) tr += jet(k, c)[1 + c];
                dI += tr * dw[k - 1];
            }
            double trdb = 0.0;
            for (int c = 0; c < d; ++c) trdb += w.db[static_cast<std::size_t>(c * d + c)];
            double trds2 = 0.0;
            for (int k = 1; k <= d1; ++k)
                for (int c = 0; c < d; ++c)
                    for (int j = 0; j < d; ++j) trds2 += jet(k, c)[1 + j] * jet(k, j)[1 + c];
            I_[i] += dI;
            J_[i] += (trdb + 0.5 * trds2) * dt;
        }
    }, 256);

    if (blowup)
        throw NumericalError("flow blowup (nonfinite state) at time node " + std::to_string(m_ + 1) +
                             ", t = " + std::to_string((m_ + 1) * dt));
    ++m_;
}

double FlowIntegrator::det_direct(long i) const {
    return det_small(DX_.data() + static_cast<std::size_t>(i) * d_ * d_, d_);
}

double FlowIntegrator::det_formula(long i) const {
    return std::exp(-I_[static_cast<std::size_t>(i)] - J_[static_cast<std::size_t>(i)]);
}

double FlowIntegrator::min_det_direct() const {
    double m = det_direct(0);
    for (long i = 1; i < npts_; ++i) m = std::min(m, det_direct(i));
    return m;
}

double FlowIntegrator::min_singular_value() const {
    double gram[16], eig[4];
    double best = -1.0;
    for (long i = 0; i < npts_; ++i) {
        const double* dx = DX(i);
        for (int r = 0; r < d_; ++r)
            for (int c = 0; c < d_; ++c) {
                double s = 0.0;
                for (int k = 0; k < d_; ++k) s += dx[k * d_ + r] * dx[k * d_ + c];
                gram[r * d_ + c] = s;
            }
        sym_eigenvalues(gram, d_, eig);
        double sv = eig[0] > 0.0 ? std::sqrt(eig[0]) : 0.0;
        if (best < 0.0 || sv < best) best = sv;
    }
    return best;
}

FlowSnapshot FlowIntegrator::snapshot() const {
    if (!has_spec_) throw ValidationError("flow snapshot requires lattice-mode integration");
    FlowSnapshot s;
    s.spec = spec_;
    s.t = time();
    s.rcut = cutoff_ ? rcut_ : 0.0;
    s.dim = d_;
    const long total = npts_;
    s.disp.resize(static_cast<std::size_t>(d_) * total);
    s.dxmi.resize(static_cast<std::size_t>(d_ * d_) * total);
    s.det_direct.resize(static_cast<std::size_t>(total));
    s.det_formula.resize(static_cast<std::size_t>(total));
    double x[kMaxDim];
    for (long i = 0; i < total; ++i) {
        spec_.node_coords(i, x);
        for (int c = 0; c < d_; ++c)
            s.disp[static_cast<std::size_t>(c) * total + static_cast<std::size_t>(i)] =
                X_[static_cast<std::size_t>(i) * d_ + c] - x[c];
        for (int r = 0; r < d_; ++r)
            for (int c = 0; c < d_; ++c)
                s.dxmi[static_cast<std::size_t>(r * d_ + c) * total + static_cast<std::size_t>(i)] =
                    DX_[static_cast<std::size_t>(i) * d_ * d_ + r * d_ + c] - (r == c ? 1.0 : 0.0);
        s.det_direct[static_cast<std::size_t>(i)] = det_direct(i);
        s.det_formula[static_cast<std::size_t>(i)] = det_formula(i);
    }
    return s;
}

void FlowIntegrator::bar_sample(int sigma_index, double t, GridVectorField& out) const {
    if (!has_spec_) throw ValidationError("bar_sample requires lattice-mode integration");
    if (out.dim != d_ || !(out.spec == spec_)) out = GridVectorField(spec_, d_);
    const auto& exprs = set_->sigma_exprs[static_cast<std::size_t>(sigma_index)];
    const long total = npts_;

    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        double val[kMaxDim], bar[kMaxDim];
        for (std::size_t i = i0; i < i1; ++i) {
            const double* xp = X(static_cast<long>(i));
            double zeta = 1.0;
            if (cutoff_) {
                double rho = 0.0;
                for (int c = 0; c < d_; ++c) rho += xp[c] * xp[c];
                zeta = cutoff_value(rho, r0_, rcut_);
            }
            for (int c = 0; c < d_; ++c) {
                val[c] = zeta == 0.0
                             ? 0.0
                             : zeta * exprs[static_cast<std::size_t>(c)].eval(
                                          t, std::span<const double>(xp, static_cast<std::size_t>(d_)));
            }
            solve_small(DX(static_cast<long>(i)), val, bar, d_);
            for (int c = 0; c < d_; ++c) out.comp(c)[i] = bar[c];
        }
    }, 1024);
}

void FlowIntegrator::hat_sample(const SegmentedExpr& s, double t, bool bump, GridField& out) const {
    if (!has_spec_) throw ValidationError("hat_sample requires lattice-mode integration");
    if (!(out.spec == spec_)) out = GridField(spec_);
    if (s.empty()) {
        std::fill(out.v.begin(), out.v.end(), 0.0);
        return;
    }
    const long total = npts_;
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const double* xp = X(static_cast<long>(i));
            double factor = 1.0;
            if (bump && cutoff_) {
                double rho = 0.0;
                for (int c = 0; c < d_; ++c) rho += xp[c] * xp[c];
                factor = cutoff_value(rho, r0_, rcut_);
            }
            out.v[i] = factor == 0.0
                           ? 0.0
                           : factor * s.eval(t, std::span<const double>(
                                                    xp, static_cast<std::size_t>(d_)));
        }
    }, 1024);
}

FlowSnapshot integrate_flow(const VectorFieldSet& set, const BrownianPath& path,
                            const GridSpec& spec) {
    FlowIntegrator fi(set, path, spec);
    fi.run_to_end();
    return fi.snapshot();
}

} // namespace spdekit
