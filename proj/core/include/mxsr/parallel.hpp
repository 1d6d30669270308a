#pragma once

#include <cstddef>
#include <functional>

namespace mxsr {

// Worker count used by the kernels. 1 (the default) runs everything inline.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs fn(i) for i in [begin, end), statically chunked across workers.
// Every index is processed by exactly one call, so kernels that write
// disjoint outputs per index stay bitwise identical for any worker count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace mxsr
