#include "pda/error.hpp"
#include "pda/reduction.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pda {

namespace {

// Flip so the largest-magnitude component is positive.
void apply_sign_convention(Eigen::VectorXd& v) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
}

} // namespace

EmbeddingModel fit_pca(const FeatureSet& x, ReductionOptions opts) {
    check(x);
    const auto n = x.size();
    const auto d = x.dim();
    if (n < 2) throw ConfigError("PCA needs at least 2 points, got " + std::to_string(n));
    if (d < 2) throw ConfigError("PCA to 2 dimensions needs dim >= 2, got " + std::to_string(d));

    auto standardizer = Standardizer::fit(x, opts.standardize);
    Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = standardizer.apply(x.row(i));
        for (std::size_t k = 0; k < d; ++k) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s[k];
    }
    const Eigen::VectorXd center = data.colwise().mean();
    data.rowwise() -= center.transpose();
    const Eigen::MatrixXd cov = (data.transpose() * data) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
    // Eigenvalues come in ascending order.
    const auto& values = solver.eigenvalues();
    Eigen::VectorXd first = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 1);
    Eigen::VectorXd second = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 2);
    apply_sign_convention(first);
    apply_sign_convention(second);

    PcaState pca;
    pca.center.assign(center.data(), center.data() + d);
    pca.basis[0].assign(first.data(), first.data() + d);
    pca.basis[1].assign(second.data(), second.data() + d);
    pca.explained_variance = {std::max(values[static_cast<Eigen::Index>(d) - 1], 0.0),
                              std::max(values[static_cast<Eigen::Index>(d) - 2], 0.0)};
    pca.total_variance = cov.trace();
    const double top = pca.explained_variance[0];
    pca.rank_deficient = !(pca.explained_variance[1] > 1e-12 * std::max(top, 1e-300));

    std::vector<Point2> points(n);
    for (std::size_t i = 0; i < n; ++i) points[i] = detail::pca_project(pca, standardizer.apply(x.row(i)));
    return EmbeddingModel::assemble(ReductionMode::pca, x, std::move(standardizer), std::move(points),
                                    std::move(pca), TsneState{});
}

} // namespace pda
