#pragma once

namespace windmil {

/// Keeps large freed blocks in the heap instead of returning them to the OS.
/// Model evaluation allocates many node x hidden matrices per step; without
/// this every one of them is a fresh mmap and pays the page faults again.
void tune_allocator();

}  // namespace windmil
