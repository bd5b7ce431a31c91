#pragma once

#include <cstddef>
#include <vector>

namespace mtf {

/// Hard cluster assignment, one 0-based cluster index per object.
using Labels = std::vector<std::size_t>;

}  // namespace mtf
