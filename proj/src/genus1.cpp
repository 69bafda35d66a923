#include "voacx/genus1.hpp"

namespace voacx {

std::optional<ZeroModeForm> classify_zero_mode(const FockVector& v, int cutoff)
{
    const auto& V = heisenberg();
    // Read alpha, beta off the vacuum and a weight-one state, then verify on the basis.
    const Rational b0 = V.apply_zero_mode(v, FockVector::vacuum()).coeff(Partition{});
    const Rational b1 = cutoff > 1 ? V.apply_zero_mode(v, FockVector(Partition{1})).coeff(Partition{1}) : b0;
    const ZeroModeForm f{b1 - b0, b0};
    for (const auto& p : fock_basis(cutoff)) {
        const FockVector w(p);
        if (!(V.apply_zero_mode(v, w) == (f.alpha * Rational(partition_weight(p)) + f.beta) * w)) return std::nullopt;
    }
    return f;
}

ZeroModeForm genus1_D1_form(const FockVector& v, int q_order)
{
    auto f = classify_zero_mode(v, std::max(q_order, 2));
    if (!f) throw UnsupportedError("zero mode of " + v.str() + " is not of the form alpha L(0) + beta on the module");
    return *f;
}

Genus1Value genus1_trace(const InsertionList<Complex>& ins, int q_order, int weight_cutoff)
{
    return genus1_trace_nomes(to_nomes(ins), q_order, weight_cutoff);
}

Genus1Value genus1_reduce(const InsertionList<Complex>& ins, int q_order)
{
    return genus1_reduce_nomes(to_nomes(ins), q_order);
}

Genus1Value genus1_partition(int q_order) { return genus1_partition_t<Complex>(q_order); }

std::vector<Genus1Term<Complex>> genus1_D2_terms(const Insertion<Complex>& x_new, const InsertionList<Complex>& rest,
                                                 int q_order)
{
    InsertionList<Complex> r = to_nomes(rest);
    return genus1_D2_terms_nomes(Insertion<Complex>{x_new.state, std::exp(x_new.point)}, r, q_order);
}

} // namespace voacx
