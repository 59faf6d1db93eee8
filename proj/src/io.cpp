#include "nesslab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nesslab/errors.hpp"

namespace nesslab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for checksum");
    uint64_t hash = 0xcbf29ce484222325ULL;
    char chunk[4096];
    while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(chunk[i]);
            hash *= 0x100000001b3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(chunk))) break;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string profile_csv(const std::vector<double>& x, const Eigen::MatrixXd& values_by_cell) {
    std::ostringstream os;
    os << "x";
    for (int c = 0; c < values_by_cell.rows(); ++c) os << ",q_" << (c + 1);
    os << "\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        os << format_double(x[i]);
        for (int c = 0; c < values_by_cell.rows(); ++c) {
            os << "," << format_double(values_by_cell(c, static_cast<int>(i)));
        }
        os << "\n";
    }
    return os.str();
}

std::string matrix_csv(const std::vector<double>& x_rows, const std::vector<double>& x_cols,
                       const Eigen::MatrixXd& m) {
    std::ostringstream os;
    os << "x";
    for (double xc : x_cols) os << "," << format_double(xc);
    os << "\n";
    for (int i = 0; i < m.rows(); ++i) {
        os << format_double(x_rows[static_cast<std::size_t>(i)]);
        for (int j = 0; j < m.cols(); ++j) os << "," << format_double(m(i, j));
        os << "\n";
    }
    return os.str();
}

std::string table_csv(const std::vector<std::string>& headers,
                      const std::vector<Eigen::VectorXd>& columns) {
    std::ostringstream os;
    for (std::size_t c = 0; c < headers.size(); ++c) os << (c ? "," : "") << headers[c];
    os << "\n";
    const Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            os << (c ? "," : "") << format_double(columns[c](r));
        }
        os << "\n";
    }
    return os.str();
}

} // namespace nesslab
