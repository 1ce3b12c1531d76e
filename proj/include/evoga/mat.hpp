#ifndef EVOGA_MAT_HPP
#define EVOGA_MAT_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <cblas.h>

namespace evoga {

// Thrown when tensor shapes are incompatible with an operation.
struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a loss or gradient stops being finite.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on malformed or unwritable files.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix of 64-bit reals. The only tensor type in the
// library; vectors are 1xN or Nx1 matrices, scalars are 1x1.
class Mat {
public:
    Mat() : rows_(0), cols_(0) {}
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {}

    static Mat scalar(double x) {
        Mat m(1, 1);
        m(0, 0) = x;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return v_.size(); }

    double& operator()(int r, int c) { return v_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return v_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](size_t i) { return v_[i]; }
    double operator[](size_t i) const { return v_[i]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && v_ == o.v_;
    }

private:
    int rows_, cols_;
    std::vector<double> v_;
};

inline void check_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (!a.same_shape(b))
        throw shape_error(std::string(op) + ": shape mismatch " + a.shape_str() +
                          " vs " + b.shape_str());
}

// C = A * B via BLAS.
inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw shape_error("matmul: inner dims differ, " + a.shape_str() + " * " + b.shape_str());
    Mat c(a.rows(), b.cols());
    if (a.rows() == 0 || b.cols() == 0 || a.cols() == 0) return c;
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, a.rows(), b.cols(), a.cols(),
                1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0, c.data(), c.cols());
    return c;
}

// C = A^T * B.
inline Mat matmul_tn(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows())
        throw shape_error("matmul_tn: outer dims differ, " + a.shape_str() + " , " + b.shape_str());
    Mat c(a.cols(), b.cols());
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, a.cols(), b.cols(), a.rows(),
                1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0, c.data(), c.cols());
    return c;
}

// C = A * B^T.
inline Mat matmul_nt(const Mat& a, const Mat& b) {
    if (a.cols() != b.cols())
        throw shape_error("matmul_nt: inner dims differ, " + a.shape_str() + " , " + b.shape_str());
    Mat c(a.rows(), b.rows());
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, a.rows(), b.rows(), a.cols(),
                1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0, c.data(), c.cols());
    return c;
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

template <class F>
Mat map(const Mat& a, F f) {
    Mat out(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <class F>
Mat zip(const Mat& a, const Mat& b, const char* op, F f) {
    check_same_shape(a, b, op);
    Mat out(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}
inline Mat operator-(const Mat& a, const Mat& b) {
    return zip(a, b, "subtract", [](double x, double y) { return x - y; });
}
inline Mat operator*(const Mat& a, double s) {
    return map(a, [s](double x) { return x * s; });
}
inline Mat hadamard(const Mat& a, const Mat& b) {
    return zip(a, b, "multiply", [](double x, double y) { return x * y; });
}

inline void axpy(Mat& acc, const Mat& g) {
    check_same_shape(acc, g, "accumulate");
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

}  // namespace evoga

#endif
