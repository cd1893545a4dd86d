#include "varest/haar.hpp"

#include <algorithm>
#include <cmath>

#include "varest/error.hpp"

namespace varest {

namespace {

void check_levels(int levels) {
    if (levels < 0 || levels > 30) throw Error(ErrorCode::InvalidArgument, "resolution level must lie in [0, 30]");
}

}  // namespace

std::size_t haar_size(int levels) {
    check_levels(levels);
    return (std::size_t{1} << levels) - 1;
}

long long dyadic_cell(double u, int levels) {
    check_levels(levels);
    const long long cells = 1LL << levels;
    const auto c = static_cast<long long>(std::floor(u * static_cast<double>(cells)));
    return std::clamp(c, 0LL, cells - 1);
}

double haar_eval(int level, long long shift, double u) {
    if (u < 0.0 || u > 1.0) return 0.0;
    if (dyadic_cell(u, level) != shift) return 0.0;
    const double scale = std::sqrt(std::ldexp(1.0, level));
    // Sign from the next finer cell: even child is the positive half.
    return dyadic_cell(u, level + 1) % 2 == 0 ? scale : -scale;
}

std::vector<double> haar_vector(double u, int levels) {
    std::vector<double> out(haar_size(levels), 0.0);
    for (int j = 0; j < levels; ++j) {
        const long long l = dyadic_cell(u, j);
        out[static_cast<std::size_t>((1LL << j) - 1 + l)] = haar_eval(j, l, u);
    }
    return out;
}

Eigen::MatrixXd haar_gram(int levels) {
    const auto size = static_cast<Eigen::Index>(haar_size(levels));
    const long long cells = 1LL << levels;
    const double width = std::ldexp(1.0, -levels);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(size, size);
    for (long long c = 0; c < cells; ++c) {
        const double mid = (static_cast<double>(c) + 0.5) * width;
        const auto v = haar_vector(mid, levels);
        for (Eigen::Index a = 0; a < size; ++a) {
            if (v[a] == 0.0) continue;
            for (Eigen::Index b = 0; b < size; ++b) gram(a, b) += v[a] * v[b] * width;
        }
    }
    return gram;
}

}  // namespace varest
