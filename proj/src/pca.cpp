#include "fedprov/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "fedprov/error.hpp"

namespace fedprov {

namespace {
constexpr double kRelativeFloor = 1e-10;

// Deterministic orientation: the largest-magnitude entry of each component is positive.
void orient(RowMatrix& comps) {
    for (Eigen::Index r = 0; r < comps.rows(); ++r) {
        Eigen::Index arg = 0;
        comps.row(r).cwiseAbs().maxCoeff(&arg);
        if (comps(r, arg) < 0) comps.row(r) *= -1.0;
    }
}
}  // namespace

PcaResult pca(const RowMatrix& points, std::size_t components, double floor) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (n < 2) throw Error(ErrorKind::insufficient_population, "pca: need at least 2 points");
    const Eigen::RowVectorXd mean = points.colwise().mean();
    const RowMatrix centered = points.rowwise() - mean;
    const double denom = static_cast<double>(n - 1);

    Eigen::VectorXd evals;
    RowMatrix comps;  // rows = components (descending)
    if (d <= n) {
        const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        evals = es.eigenvalues().reverse();
        comps = es.eigenvectors().rowwise().reverse().transpose();
    } else {
        const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        evals = es.eigenvalues().reverse();
        const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
        comps.resize(n, d);
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::RowVectorXd dir = vecs.col(k).transpose() * centered;
            const double len = dir.norm();
            if (len > 0) dir /= len;
            comps.row(k) = dir;
        }
    }

    const double top = evals.size() > 0 ? std::max(evals(0), 0.0) : 0.0;
    Eigen::Index kept = 0;
    const auto want = std::min<Eigen::Index>(static_cast<Eigen::Index>(components), evals.size());
    while (kept < want && evals(kept) >= floor && evals(kept) > kRelativeFloor * top) ++kept;

    PcaResult out;
    out.eigenvalues = evals.head(kept);
    out.components = comps.topRows(kept);
    orient(out.components);
    out.scores = centered * out.components.transpose();
    out.mean = mean;
    return out;
}

RowMatrix PcaResult::project(const RowMatrix& x) const {
    return (x.rowwise() - mean) * components.transpose();
}

Eigen::VectorXd pca_mahalanobis(const RowMatrix& points, std::size_t components) {
    const PcaResult p = pca(points, components);
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(points.rows());
    for (Eigen::Index k = 0; k < p.scores.cols(); ++k)
        dist.array() += p.scores.col(k).array().square() / p.eigenvalues(k);
    return dist.cwiseSqrt();
}

}  // namespace fedprov
