#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include "reflectsim/types.hpp"

namespace reflectsim
{

// Runs body(i) for i in [0, count) under OpenMP, or in order when serial.
// The serial path is the reference for tests. An exception cannot leave an
// OpenMP region, so the first one is parked and rethrown after the loop.
template <class Body>
void parallel_for(std::ptrdiff_t count, Execution exec, Body&& body, int chunk = 1)
{
    if (exec == Execution::serial)
    {
        for (std::ptrdiff_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
#pragma omp parallel for schedule(dynamic, chunk)
    for (std::ptrdiff_t i = 0; i < count; ++i)
    {
        try
        {
            body(i);
        }
        catch (...)
        {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace reflectsim
