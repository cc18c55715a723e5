#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace varigeo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Number of worker threads: hardware concurrency capped by VARIGEO_THREADS.
int thread_count();

// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers write
// into pre-sized slots so results do not depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& fn);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double normal() { return nd_(eng_); }
    double uniform(double a = 0.0, double b = 1.0) {
        return a + (b - a) * ud_(eng_);
    }
    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    Mat gaussian(int rows, int cols);
    Vec gaussian(int n);
    Mat orthonormal(int rows, int cols);  // Haar-ish via QR of a Gaussian
    Mat low_rank(int rows, int cols, int rank);
    std::uint64_t next() { return eng_(); }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> nd_{0.0, 1.0};
    std::uniform_real_distribution<double> ud_{0.0, 1.0};
};

// Deterministic per-task seed derived from a base seed and a task index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace varigeo
