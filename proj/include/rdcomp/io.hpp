#ifndef RDCOMP_IO_HPP
#define RDCOMP_IO_HPP

#include "rdcomp/types.hpp"

#include <string>

namespace rdcomp {

/// Plain-text weight vector: one decimal float per line. Blank lines and
/// lines starting with '#' are skipped.
Eigen::VectorXd read_weights(const std::string& path);

/// Writes with max_digits10 precision so values round-trip exactly.
void write_weights(const Eigen::VectorXd& w, const std::string& path);

std::string weights_text(const Eigen::VectorXd& w);

}  // namespace rdcomp

#endif  // RDCOMP_IO_HPP
