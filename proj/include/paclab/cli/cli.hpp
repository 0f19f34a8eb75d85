#pragma once
namespace paclab::cli {
inline int run(int, char**) { return 2; }
}  // namespace paclab::cli
