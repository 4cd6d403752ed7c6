#include "rdcomp/io.hpp"

#include "rdcomp/harness.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace rdcomp {

Eigen::VectorXd read_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<double> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(line.substr(first), &used);
        } catch (const std::exception&) {
            throw ParameterError(path + ":" + std::to_string(line_no) + ": not a number");
        }
        const auto rest = line.find_first_not_of(" \t\r", first + used);
        if (rest != std::string::npos) throw ParameterError(path + ":" + std::to_string(line_no) + ": trailing text");
        values.push_back(v);
    }
    if (in.bad()) throw IoError("read from " + path + " failed");
    Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
    require_finite(w, path);
    return w;
}

std::string weights_text(const Eigen::VectorXd& w) {
    std::ostringstream o;
    o.precision(std::numeric_limits<double>::max_digits10);
    for (Index j = 0; j < w.size(); ++j) o << w(j) << '\n';
    return o.str();
}

void write_weights(const Eigen::VectorXd& w, const std::string& path) {
    write_text(weights_text(w), path);
}

}  // namespace rdcomp
