#pragma once

// Binary containers shared by matrices, Hilbert-valued vectors, datasets and
// models. All integers and floats are written in host (little-endian) order.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hvapprox::io {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::array<char, 8> kMatrixMagic{'H', 'V', 'M', 'A', 'T', '0', '0', '1'};

class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename T>
void write_pod(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw format_error("unexpected end of stream");
    return v;
}

inline void write_magic(std::ostream& os, const std::array<char, 8>& magic)
{
    os.write(magic.data(), magic.size());
}

inline void expect_magic(std::istream& is, const std::array<char, 8>& magic)
{
    std::array<char, 8> got{};
    if (!is.read(got.data(), got.size()) || got != magic)
        throw format_error("bad magic: expected " + std::string(magic.data(), magic.size()));
}

inline void write_string(std::ostream& os, const std::string& s)
{
    write_pod<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::uint64_t max_len = (1ULL << 30))
{
    const auto n = read_pod<std::uint64_t>(is);
    if (n > max_len) throw format_error("string length out of range");
    std::string s(n, '\0');
    if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) throw format_error("truncated string");
    return s;
}

/// Writes rows*cols doubles in row-major order.
template <typename Derived>
void write_block(std::ostream& os, const Eigen::MatrixBase<Derived>& m)
{
    const RowMatrix rm = m;
    os.write(reinterpret_cast<const char*>(rm.data()),
             static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

inline RowMatrix read_block(std::istream& is, std::uint64_t rows, std::uint64_t cols)
{
    RowMatrix rm(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (rm.size() &&
        !is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size())))
        throw format_error("truncated data block");
    return rm;
}

/// Matrix container: magic, rows, cols, label, then row-major doubles.
template <typename Derived>
void write_matrix(std::ostream& os, const Eigen::MatrixBase<Derived>& m, const std::string& label = {})
{
    write_magic(os, kMatrixMagic);
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    write_string(os, label);
    write_block(os, m);
}

struct LabeledMatrix {
    Eigen::MatrixXd values;
    std::string label;
};

inline LabeledMatrix read_matrix(std::istream& is)
{
    expect_magic(is, kMatrixMagic);
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw format_error("matrix dimensions out of range");
    LabeledMatrix out;
    out.label = read_string(is);
    out.values = read_block(is, rows, cols);
    return out;
}

template <typename Derived>
void write_csv(std::ostream& os, const Eigen::MatrixBase<Derived>& m)
{
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    return os;
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
    return is;
}

} // namespace hvapprox::io
