#include "voacx/complex.hpp"

#include <Eigen/SVD>

namespace voacx {

namespace {

struct RankInfo {
    Eigen::Index rank = 0;
    bool indeterminate = false;
    std::vector<double> sv;
};

RankInfo numeric_rank(const Eigen::MatrixXcd& M, const CohomologyOptions& opts)
{
    RankInfo out;
    if (M.rows() == 0 || M.cols() == 0) return out;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) out.sv.push_back(s(i));
    const double smax = s.size() ? s(0) : 0.0;
    if (smax == 0.0) return out;
    const double cut = opts.rank_tol * smax;
    for (double v : out.sv) {
        if (v > cut) ++out.rank;
        // A value within `gap` of the cutoff on either side leaves the rank ambiguous.
        if (v > cut / opts.gap && v < cut * opts.gap) out.indeterminate = true;
    }
    return out;
}

} // namespace

std::vector<DegreeRanks> cohomology_ranks(const std::vector<Eigen::MatrixXcd>& d, const CohomologyOptions& opts)
{
    std::vector<DegreeRanks> out;
    Eigen::Index prev_rank = 0;
    for (std::size_t m = 0; m < d.size(); ++m) {
        DegreeRanks r;
        r.m = static_cast<int>(m);
        r.domain_dim = d[m].cols();
        if (m > 0 && d[m - 1].rows() != d[m].cols()) throw DomainError("differentials do not compose");
        const RankInfo ri = numeric_rank(d[m], opts);
        r.rank = ri.rank;
        r.indeterminate = ri.indeterminate;
        r.singular_values = ri.sv;
        r.kernel_dim = r.domain_dim - r.rank;
        r.image_prev = prev_rank;
        // H = ker d^m / (im d^{m-1} cap ker d^m); dim(im cap ker) = rank d^{m-1} - rank d^m d^{m-1}.
        Eigen::Index lost = 0;
        if (m > 0 && d[m].rows() > 0 && d[m - 1].cols() > 0) {
            const Eigen::MatrixXcd dd = d[m] * d[m - 1];
            r.composition_residual = dd.cwiseAbs().maxCoeff();
            if (r.composition_residual > opts.complex_tol) lost = numeric_rank(dd, opts).rank;
        }
        r.h_dim = r.kernel_dim - r.image_prev + lost;
        r.is_complex = r.composition_residual <= opts.complex_tol;
        prev_rank = r.rank;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace voacx
