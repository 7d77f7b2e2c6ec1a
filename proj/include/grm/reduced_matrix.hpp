#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grm/errors.hpp"
#include "grm/google_matrix.hpp"
#include "grm/graph.hpp"
#include "grm/parallel.hpp"

namespace grm {

struct ReduceTolerances {
    double eigen_tol = 1e-12;
    std::size_t eigen_max_iter = 10000;
    double series_tol = 1e-12;
    std::size_t series_max_terms = 10000;
};

// Reduced Google matrix over a node subset (size Nr) and its exact
// decomposition gr = grr + gpr + gqrd + gqrnd.  Orientation: column j is the
// source node, row i the destination.  grr carries the direct links, gpr the
// projector part aligned with the complement's leading eigenvector, and
// gqrd/gqrnd the diagonal/off-diagonal hidden-path contributions.
struct ReducedMatrixSet {
    NodeSubset subset;
    Eigen::MatrixXd gr, grr, gpr, gqrd, gqrnd;
    double lambda_c = 0.0; // leading eigenvalue of the complement block; 0 if complement empty
    double alpha = 0.85;
    std::string edition_tag;
    ReduceTolerances tolerances;

    Eigen::Index nr() const { return gr.rows(); }
    Eigen::MatrixXd gqr() const { return gqrd + gqrnd; }
};

struct ComplementSpectrum {
    double lambda_c = 0.0;
    Eigen::VectorXd psi_right, psi_left; // L1-normalized, entrywise non-negative
    double residual_right = 0.0, residual_left = 0.0;
    std::size_t iterations_right = 0, iterations_left = 0;
};

namespace detail {

inline void validate_subset(const DirectedGraph& graph, const NodeSubset& subset) {
    if (subset.indices.empty()) throw std::invalid_argument("subset is empty");
    if (subset.names.size() != subset.indices.size())
        throw std::invalid_argument("subset names and indices differ in length");
    std::unordered_set<NodeId> seen;
    for (const NodeId v : subset.indices) {
        if (v >= graph.n_nodes()) throw std::invalid_argument("subset id out of range");
        if (!seen.insert(v).second) throw std::invalid_argument("duplicate id in subset");
    }
}

// Implicit actions of the full Google operator partitioned into subset (r)
// and complement (s) blocks.  Only complement-restricted CSR adjacency is
// stored: O(edges) memory, never an Ns x Ns dense object.  Teleport adds
// (1-alpha)/N to every entry of every block and is folded into scalar
// accumulators per application.
class BlockOperator {
public:
    BlockOperator(const GoogleMatrix& op, const NodeSubset& subset) : op_(&op) {
        const DirectedGraph& g = op.graph();
        const NodeId n = g.n_nodes();
        nr_ = static_cast<NodeId>(subset.size());
        ns_ = n - nr_;
        rpos_.reserve(nr_);
        for (NodeId k = 0; k < nr_; ++k) rpos_.emplace(subset.indices[k], k);
        sorted_subset_ = subset.indices;
        std::sort(sorted_subset_.begin(), sorted_subset_.end());
        comp_.reserve(ns_);
        for (NodeId v = 0; v < n; ++v)
            if (!rpos_.count(v)) comp_.push_back(v);

        s_off_.assign(ns_ + 1, 0);
        r_off_.assign(ns_ + 1, 0);
        weight_.assign(ns_, 0.0);
        for (NodeId jj = 0; jj < ns_; ++jj) {
            s_off_[jj] = s_tgt_.size();
            r_off_[jj] = r_tgt_.size();
            const NodeId j = comp_[jj];
            weight_[jj] = op.alpha() * op.inverse_out_degree(j);
            if (op.is_dangling(j)) s_dangling_.push_back(jj);
            for (const NodeId t : g.out_links(j)) {
                const auto it = rpos_.find(t);
                if (it != rpos_.end())
                    r_tgt_.push_back(it->second);
                else
                    s_tgt_.push_back(complement_pos(t));
            }
        }
        s_off_[ns_] = s_tgt_.size();
        r_off_[ns_] = r_tgt_.size();

        sr_off_.assign(nr_ + 1, 0);
        for (NodeId k = 0; k < nr_; ++k) {
            sr_off_[k] = sr_tgt_.size();
            for (const NodeId t : g.out_links(subset.indices[k]))
                if (!rpos_.count(t)) sr_tgt_.push_back(complement_pos(t));
        }
        sr_off_[nr_] = sr_tgt_.size();
    }

    NodeId nr() const { return nr_; }
    NodeId ns() const { return ns_; }
    const std::vector<NodeId>& complement() const { return comp_; }

    // out = Gss v
    void apply_ss(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        const double base = block_base(v);
        out.setConstant(ns_, base);
        for (NodeId jj = 0; jj < ns_; ++jj) {
            if (weight_[jj] == 0.0) continue;
            const double f = weight_[jj] * v[jj];
            for (std::size_t e = s_off_[jj]; e < s_off_[jj + 1]; ++e) out[s_tgt_[e]] += f;
        }
    }

    // out = Gss^T v
    void apply_ss_transpose(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        const double total = v.sum();
        out.setConstant(ns_, op_->teleport() * total);
        const double dangling_term = op_->alpha() * total * op_->inv_n();
        for (const NodeId jj : s_dangling_) out[jj] += dangling_term;
        for (NodeId jj = 0; jj < ns_; ++jj) {
            if (weight_[jj] == 0.0) continue;
            double acc = 0.0;
            for (std::size_t e = s_off_[jj]; e < s_off_[jj + 1]; ++e) acc += v[s_tgt_[e]];
            out[jj] += weight_[jj] * acc;
        }
    }

    // out = Grs y (length Nr)
    void apply_rs(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
        const double base = block_base(y);
        out.setConstant(nr_, base);
        for (NodeId jj = 0; jj < ns_; ++jj) {
            if (weight_[jj] == 0.0) continue;
            const double f = weight_[jj] * y[jj];
            for (std::size_t e = r_off_[jj]; e < r_off_[jj + 1]; ++e) out[r_tgt_[e]] += f;
        }
    }

    // out = Gsr e_k: column of the complement-from-subset block (length Ns)
    void gsr_column(NodeId k, const NodeSubset& subset, Eigen::VectorXd& out) const {
        const NodeId j = subset.indices[k];
        double base = op_->teleport();
        if (op_->is_dangling(j)) base += op_->alpha() * op_->inv_n();
        out.setConstant(ns_, base);
        const double w = op_->alpha() * op_->inverse_out_degree(j);
        for (std::size_t e = sr_off_[k]; e < sr_off_[k + 1]; ++e) out[sr_tgt_[e]] += w;
    }

private:
    NodeId complement_pos(NodeId v) const {
        const auto below = std::lower_bound(sorted_subset_.begin(), sorted_subset_.end(), v)
                           - sorted_subset_.begin();
        return v - static_cast<NodeId>(below);
    }

    double block_base(const Eigen::VectorXd& v) const {
        const double total = v.sum();
        double dangling_mass = 0.0;
        for (const NodeId jj : s_dangling_) dangling_mass += v[jj];
        return op_->alpha() * dangling_mass * op_->inv_n() + op_->teleport() * total;
    }

    const GoogleMatrix* op_;
    NodeId nr_ = 0, ns_ = 0;
    std::unordered_map<NodeId, NodeId> rpos_;
    std::vector<NodeId> sorted_subset_;
    std::vector<NodeId> comp_;
    std::vector<std::size_t> s_off_, r_off_, sr_off_;
    std::vector<NodeId> s_tgt_, r_tgt_, sr_tgt_;
    std::vector<double> weight_; // alpha / k_out per complement source; 0 = dangling
    std::vector<NodeId> s_dangling_;
};

struct PowerEigenResult {
    double lambda = 0.0;
    Eigen::VectorXd psi;
    double residual = 0.0;
    std::size_t iterations = 0;
};

// Power iteration for the leading eigenpair of the (strictly positive)
// complement block or its transpose.  Iterates stay non-negative, so the
// eigenvalue estimate is the plain column mass of the image.
inline PowerEigenResult leading_eigen(const BlockOperator& blk, bool transpose, double tol,
                                      std::size_t max_iter) {
    const NodeId ns = blk.ns();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(ns, 1.0 / static_cast<double>(ns));
    Eigen::VectorXd w(ns);
    double residual = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        if (transpose)
            blk.apply_ss_transpose(v, w);
        else
            blk.apply_ss(v, w);
        const double lambda = w.sum();
        residual = (w - lambda * v).lpNorm<1>();
        if (residual <= tol) return {lambda, v, residual, it};
        v = w / w.lpNorm<1>();
    }
    throw ConvergenceError(transpose ? "left complement eigenvector did not converge"
                                     : "right complement eigenvector did not converge",
                           residual, max_iter);
}

inline void split_hidden(const Eigen::MatrixXd& gqr, ReducedMatrixSet& rs) {
    rs.gqrd = Eigen::MatrixXd::Zero(gqr.rows(), gqr.cols());
    rs.gqrd.diagonal() = gqr.diagonal();
    rs.gqrnd = gqr;
    rs.gqrnd.diagonal().setZero();
}

inline Eigen::MatrixXd direct_block(const GoogleMatrix& op, const NodeSubset& subset) {
    const Eigen::Index nr = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd grr(nr, nr);
    for (Eigen::Index k = 0; k < nr; ++k)
        for (Eigen::Index i = 0; i < nr; ++i)
            grr(i, k) = op.entry(subset.indices[i], subset.indices[k]);
    return grr;
}

} // namespace detail

// Leading eigen-triple of the complement block Gss (the full Google operator
// restricted to complement rows and columns, teleport and dangling terms
// included).  Both eigenvectors are L1-normalized.
inline ComplementSpectrum complement_leading_eigen(const DirectedGraph& graph,
                                                   const NodeSubset& subset, double alpha = 0.85,
                                                   double tol = 1e-12,
                                                   std::size_t max_iter = 10000) {
    detail::validate_subset(graph, subset);
    if (subset.size() == graph.n_nodes())
        throw std::invalid_argument("complement is empty");
    const GoogleMatrix op(graph, alpha);
    const detail::BlockOperator blk(op, subset);
    const auto right = detail::leading_eigen(blk, false, tol, max_iter);
    const auto left = detail::leading_eigen(blk, true, tol, max_iter);
    ComplementSpectrum spec;
    spec.lambda_c = right.lambda;
    spec.psi_right = right.psi;
    spec.psi_left = left.psi;
    spec.residual_right = right.residual;
    spec.residual_left = left.residual;
    spec.iterations_right = right.iterations;
    spec.iterations_left = left.iterations;
    return spec;
}

// Exact reduction GR = Grr + Grs (1 - Gss)^-1 Gsr via the projector split.
// The resolvent is never formed: its near-singular direction (lambda_c -> 1)
// is isolated in the rank-one projector P_c built from the leading eigenpair
// of Gss, and the remainder is summed as a geometric series of implicit
// operator applications, O(Ns) working storage per in-flight column.
inline ReducedMatrixSet reduce(const DirectedGraph& graph, const NodeSubset& subset,
                               double alpha = 0.85, const ReduceTolerances& tol = {},
                               unsigned threads = 1, std::string edition_tag = {}) {
    detail::validate_subset(graph, subset);
    if (!(tol.eigen_tol > 0.0 && tol.series_tol > 0.0))
        throw std::invalid_argument("tolerances must be positive");
    const GoogleMatrix op(graph, alpha);
    const Eigen::Index nr = static_cast<Eigen::Index>(subset.size());

    ReducedMatrixSet rs;
    rs.subset = subset;
    rs.alpha = alpha;
    rs.edition_tag = std::move(edition_tag);
    rs.tolerances = tol;
    rs.grr = detail::direct_block(op, subset);

    if (subset.size() == graph.n_nodes()) {
        // Empty complement: the resolvent term vanishes and GR is the full G.
        rs.gr = rs.grr;
        rs.gpr = Eigen::MatrixXd::Zero(nr, nr);
        detail::split_hidden(rs.gpr, rs);
        rs.lambda_c = 0.0;
        return rs;
    }

    const detail::BlockOperator blk(op, subset);
    const auto right = detail::leading_eigen(blk, false, tol.eigen_tol, tol.eigen_max_iter);
    const auto left = detail::leading_eigen(blk, true, tol.eigen_tol, tol.eigen_max_iter);
    const double lambda_c = right.lambda;
    const Eigen::VectorXd& psi_r = right.psi;
    const Eigen::VectorXd& psi_l = left.psi;
    const double denom = psi_l.dot(psi_r);
    const double proj_scale = 1.0 / ((1.0 - lambda_c) * denom);

    Eigen::VectorXd grs_psi_r(nr);
    blk.apply_rs(psi_r, grs_psi_r);

    Eigen::MatrixXd gpr(nr, nr), gqr(nr, nr);
    const NodeId ns = blk.ns();
    parallel_for(static_cast<std::size_t>(nr), threads, [&](std::size_t begin, std::size_t end) {
        Eigen::VectorXd gsr_col(ns), v(ns), image(ns), sum(ns), qcol(nr);
        for (std::size_t k = begin; k < end; ++k) {
            blk.gsr_column(static_cast<NodeId>(k), subset, gsr_col);
            const double ck = psi_l.dot(gsr_col);
            gpr.col(k) = grs_psi_r * (ck * proj_scale);
            // Geometric series on the complement of the leading direction:
            // v_0 = Q_c Gsr e_k, v_{l+1} = Q_c Gss v_l.
            v = gsr_col - psi_r * (ck / denom);
            sum = v;
            bool converged = false;
            double tail = 0.0;
            for (std::size_t l = 0; l < tol.series_max_terms; ++l) {
                blk.apply_ss(v, image);
                v = image - psi_r * (psi_l.dot(image) / denom);
                sum += v;
                tail = v.lpNorm<1>();
                if (tail < tol.series_tol) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw ConvergenceError("hidden-path series did not converge for column "
                                           + std::to_string(k),
                                       tail, tol.series_max_terms);
            blk.apply_rs(sum, qcol);
            gqr.col(k) = qcol;
        }
    });

    rs.gpr = std::move(gpr);
    rs.lambda_c = lambda_c;
    detail::split_hidden(gqr, rs);
    rs.gr = rs.grr + rs.gpr + gqr;
    return rs;
}

// Dense reference route: materializes G, computes GR by a direct linear
// solve and the decomposition from a dense eigensolver of the complement
// block.  Guarded to small networks; used by tests and the verify command.
inline ReducedMatrixSet dense_oracle_reduce(const DirectedGraph& graph, const NodeSubset& subset,
                                            double alpha = 0.85) {
    constexpr NodeId kDenseLimit = 2000;
    const NodeId n = graph.n_nodes();
    if (n > kDenseLimit)
        throw std::invalid_argument("dense oracle limited to " + std::to_string(kDenseLimit)
                                    + " nodes");
    detail::validate_subset(graph, subset);
    const GoogleMatrix op(graph, alpha);
    const Eigen::Index nr = static_cast<Eigen::Index>(subset.size());
    const Eigen::Index ns = static_cast<Eigen::Index>(n) - nr;

    ReducedMatrixSet rs;
    rs.subset = subset;
    rs.alpha = alpha;
    rs.edition_tag = "dense-oracle";
    rs.grr = detail::direct_block(op, subset);
    if (ns == 0) {
        rs.gr = rs.grr;
        rs.gpr = Eigen::MatrixXd::Zero(nr, nr);
        detail::split_hidden(rs.gpr, rs);
        rs.lambda_c = 0.0;
        return rs;
    }

    std::vector<NodeId> comp;
    comp.reserve(ns);
    {
        std::unordered_set<NodeId> in_subset(subset.indices.begin(), subset.indices.end());
        for (NodeId v = 0; v < n; ++v)
            if (!in_subset.count(v)) comp.push_back(v);
    }
    Eigen::MatrixXd grs(nr, ns), gsr(ns, nr), gss(ns, ns);
    for (Eigen::Index j = 0; j < ns; ++j) {
        for (Eigen::Index i = 0; i < nr; ++i) grs(i, j) = op.entry(subset.indices[i], comp[j]);
        for (Eigen::Index i = 0; i < ns; ++i) gss(i, j) = op.entry(comp[i], comp[j]);
    }
    for (Eigen::Index j = 0; j < nr; ++j)
        for (Eigen::Index i = 0; i < ns; ++i) gsr(i, j) = op.entry(comp[i], subset.indices[j]);

    const Eigen::MatrixXd resolvent_gsr =
        (Eigen::MatrixXd::Identity(ns, ns) - gss).partialPivLu().solve(gsr);
    rs.gr = rs.grr + grs * resolvent_gsr;

    const auto perron = [](const Eigen::MatrixXd& m) {
        const Eigen::EigenSolver<Eigen::MatrixXd> es(m);
        const auto& values = es.eigenvalues();
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < values.size(); ++i)
            if (std::abs(values[i]) > std::abs(values[best])) best = i;
        if (std::abs(values[best].imag()) > 1e-9 * std::max(1.0, std::abs(values[best].real())))
            throw ConvergenceError("complement leading eigenvalue is not real",
                                   std::abs(values[best].imag()), 0);
        Eigen::VectorXd v = es.eigenvectors().col(best).real();
        v /= v.sum(); // Perron vector has one sign; this makes it non-negative, L1 = 1
        return std::make_pair(values[best].real(), v);
    };
    const auto [lambda_c, psi_r] = perron(gss);
    const auto [lambda_l, psi_l] = perron(gss.transpose());
    (void)lambda_l;
    const double denom = psi_l.dot(psi_r);
    rs.gpr = (grs * psi_r) * (psi_l.transpose() * gsr) / ((1.0 - lambda_c) * denom);
    rs.lambda_c = lambda_c;
    const Eigen::MatrixXd gqr = grs * resolvent_gsr - rs.gpr;
    detail::split_hidden(gqr, rs);
    return rs;
}

// Structural checks on a ReducedMatrixSet; returns human-readable
// descriptions of anything out of contract (empty = all good).
inline std::vector<std::string> invariant_violations(const ReducedMatrixSet& rs,
                                                     double stochastic_tol = 1e-8,
                                                     double closure_tol = 1e-10) {
    std::vector<std::string> issues;
    const Eigen::Index nr = rs.gr.rows();
    const auto check_shape = [&](const Eigen::MatrixXd& m, const char* name) {
        if (m.rows() != nr || m.cols() != nr)
            issues.push_back(std::string(name) + " has wrong shape");
    };
    check_shape(rs.grr, "grr");
    check_shape(rs.gpr, "gpr");
    check_shape(rs.gqrd, "gqrd");
    check_shape(rs.gqrnd, "gqrnd");
    if (!issues.empty()) return issues;

    for (Eigen::Index j = 0; j < nr; ++j) {
        const double colsum = rs.gr.col(j).sum();
        if (std::abs(colsum - 1.0) > stochastic_tol) {
            issues.push_back("column " + std::to_string(j) + " of gr sums to "
                             + std::to_string(colsum));
            break;
        }
    }
    const double closure = (rs.gr - (rs.grr + rs.gpr + rs.gqrd + rs.gqrnd))
                               .cwiseAbs()
                               .maxCoeff();
    if (closure > closure_tol)
        issues.push_back("decomposition closure off by " + std::to_string(closure));
    for (Eigen::Index j = 0; j < nr; ++j)
        for (Eigen::Index i = 0; i < nr; ++i) {
            if (i != j && rs.gqrd(i, j) != 0.0) {
                issues.push_back("gqrd has an off-diagonal entry");
                i = j = nr;
            }
        }
    if (rs.gqrnd.rows() == nr && rs.gqrnd.diagonal().cwiseAbs().maxCoeff() != 0.0)
        issues.push_back("gqrnd has a non-zero diagonal");
    if (rs.gr.minCoeff() < 0.0) issues.push_back("gr has a negative entry");
    if (rs.grr.minCoeff() < 0.0) issues.push_back("grr has a negative entry");
    if (rs.gpr.minCoeff() < 0.0) issues.push_back("gpr has a negative entry");
    const double gqr_min = (rs.gqrd + rs.gqrnd).minCoeff();
    if (gqr_min < -1e-8)
        issues.push_back("gqr entry below -1e-8: " + std::to_string(gqr_min));
    const bool complement_empty = rs.lambda_c == 0.0;
    if (!complement_empty && !(rs.lambda_c > 0.0 && rs.lambda_c < 1.0))
        issues.push_back("lambda_c outside (0, 1): " + std::to_string(rs.lambda_c));
    return issues;
}

} // namespace grm
