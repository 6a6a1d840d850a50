#pragma once

#include "curvmesh/errors.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace curvmesh {

enum class Provenance { sphere, torus, noisy_sphere, external_file };

inline std::string_view to_string(Provenance p)
{
    switch (p) {
    case Provenance::sphere: return "sphere";
    case Provenance::torus: return "torus";
    case Provenance::noisy_sphere: return "noisy_sphere";
    case Provenance::external_file: return "external_file";
    }
    return "unknown";
}

/// N samples in R^n, stored one point per column.
struct PointCloud
{
    Eigen::MatrixXd points; // n x N
    std::optional<int> intrinsic_dim_hint;
    std::uint64_t seed = 0;
    Provenance provenance = Provenance::external_file;

    Eigen::Index size() const { return points.cols(); }
    Eigen::Index ambient_dim() const { return points.rows(); }
    auto point(Eigen::Index i) const { return points.col(i); }
};

/// Writes one point per row, comma separated, full round-trip precision.
/// The optional first line `# n=<n>` records the ambient dimension.
inline void write_cloud_csv(std::ostream& out, const PointCloud& cloud, bool dim_comment = false)
{
    if (dim_comment) out << "# n=" << cloud.ambient_dim() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        for (Eigen::Index c = 0; c < cloud.ambient_dim(); ++c) {
            if (c) out << ',';
            out << cloud.points(c, i);
        }
        out << '\n';
    }
}

inline void write_cloud_csv(const std::string& path, const PointCloud& cloud, bool dim_comment = false)
{
    std::ofstream out(path);
    require(bool(out), ErrorCode::io, "cannot open '" + path + "' for writing");
    write_cloud_csv(out, cloud, dim_comment);
    require(bool(out), ErrorCode::io, "write failed for '" + path + "'");
}

inline PointCloud read_cloud_csv(std::istream& in, const std::string& name = "<stream>")
{
    std::vector<double> values;
    Eigen::Index dim = -1;
    std::optional<Eigen::Index> declared;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line[0] == '#') {
            const auto pos = line.find("n=");
            if (pos != std::string::npos) declared = std::stol(line.substr(pos + 2));
            continue;
        }
        std::stringstream row(line);
        std::string cell;
        Eigen::Index count = 0;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                require(
                    cell.find_first_not_of(" \t", used) == std::string::npos,
                    ErrorCode::io,
                    "");
            } catch (const std::exception&) {
                fail(ErrorCode::io,
                     name + ":" + std::to_string(line_no) + ": malformed value '" + cell + "'");
            }
            ++count;
        }
        if (dim < 0) dim = count;
        require(count == dim, ErrorCode::io,
                name + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                    " columns, found " + std::to_string(count));
    }
    require(dim > 0, ErrorCode::io, name + ": no points found");
    if (declared) {
        require(*declared == dim, ErrorCode::io,
                name + ": header declares n=" + std::to_string(*declared) + " but rows have " +
                    std::to_string(dim) + " columns");
    }
    PointCloud cloud;
    const Eigen::Index count = static_cast<Eigen::Index>(values.size()) / dim;
    cloud.points = Eigen::Map<Eigen::MatrixXd>(values.data(), dim, count);
    cloud.provenance = Provenance::external_file;
    return cloud;
}

inline PointCloud read_cloud_csv(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open '" + path + "'");
    return read_cloud_csv(in, path);
}

} // namespace curvmesh
