#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace hetbatch
{
/// Runs task(i) for i in [0, count) on up to `jobs` threads. The first
/// exception (lowest index) is rethrown after all workers finish.
template <typename Task>
void parallel_for(int count, int jobs, Task&& task)
{
  if (count <= 0)
    return;
  jobs = std::clamp(jobs, 1, count);
  if (jobs == 1)
  {
    for (int i = 0; i < count; ++i)
      task(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++)
    {
      try
      {
        task(i);
      }
      catch (...)
      {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back(worker);
  for (auto& th : pool)
    th.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}
} // namespace hetbatch
