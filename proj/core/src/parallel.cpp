#include "fitolab/parallel.hpp"

namespace fitolab {

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

}  // namespace fitolab
