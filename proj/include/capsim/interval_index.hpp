// Copyright 2026 The capsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAPSIM_INTERVAL_INDEX_HPP
#define CAPSIM_INTERVAL_INDEX_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "capsim/types.hpp"

namespace capsim {

// Treap keyed by (lo, id), augmented with the maximum interval end per
// subtree, used for stabbing/overlap queries over live capability bounds.
// Intervals are half-open [lo, hi). Priorities are derived from the id so
// the structure is deterministic.
class IntervalIndex {
 public:
  IntervalIndex() = default;
  ~IntervalIndex() { clear(); }

  IntervalIndex(const IntervalIndex&) = delete;
  IntervalIndex& operator=(const IntervalIndex&) = delete;

  void clear() {
    destroy(root_);
    root_ = nullptr;
    size_ = 0;
  }

  std::size_t size() const { return size_; }

  void insert(CapId id, std::uint64_t lo, std::uint64_t hi) {
    Node* node = new Node{lo, hi, hi, id, mix(id), nullptr, nullptr};
    root_ = insert(root_, node);
    ++size_;
  }

  // Removes the entry for (id, lo). No-op if absent.
  void erase(CapId id, std::uint64_t lo) {
    bool erased = false;
    root_ = erase(root_, lo, id, erased);
    if (erased) --size_;
  }

  // Collects ids of all intervals overlapping [lo, hi).
  void overlapping(std::uint64_t lo, std::uint64_t hi,
                   std::vector<CapId>& out) const {
    collect(root_, lo, hi, out);
  }

 private:
  struct Node {
    std::uint64_t lo;
    std::uint64_t hi;
    std::uint64_t max_hi;
    CapId id;
    std::uint64_t prio;
    Node* left;
    Node* right;
  };

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static bool key_less(std::uint64_t lo_a, CapId id_a, std::uint64_t lo_b,
                       CapId id_b) {
    return lo_a < lo_b || (lo_a == lo_b && id_a < id_b);
  }

  static void update(Node* n) {
    n->max_hi = n->hi;
    if (n->left && n->left->max_hi > n->max_hi) n->max_hi = n->left->max_hi;
    if (n->right && n->right->max_hi > n->max_hi) n->max_hi = n->right->max_hi;
  }

  static Node* merge(Node* a, Node* b) {
    if (!a) return b;
    if (!b) return a;
    if (a->prio > b->prio) {
      a->right = merge(a->right, b);
      update(a);
      return a;
    }
    b->left = merge(a, b->left);
    update(b);
    return b;
  }

  static Node* insert(Node* root, Node* node) {
    if (!root) return node;
    if (node->prio > root->prio) {
      split(root, node->lo, node->id, node->left, node->right);
      update(node);
      return node;
    }
    if (key_less(node->lo, node->id, root->lo, root->id)) {
      root->left = insert(root->left, node);
    } else {
      root->right = insert(root->right, node);
    }
    update(root);
    return root;
  }

  // Splits into keys < (lo, id) and keys >= (lo, id).
  static void split(Node* root, std::uint64_t lo, CapId id, Node*& left,
                    Node*& right) {
    if (!root) {
      left = right = nullptr;
      return;
    }
    if (key_less(root->lo, root->id, lo, id)) {
      split(root->right, lo, id, root->right, right);
      left = root;
      update(left);
    } else {
      split(root->left, lo, id, left, root->left);
      right = root;
      update(right);
    }
  }

  static Node* erase(Node* root, std::uint64_t lo, CapId id, bool& erased) {
    if (!root) return nullptr;
    if (root->lo == lo && root->id == id) {
      Node* replacement = merge(root->left, root->right);
      delete root;
      erased = true;
      return replacement;
    }
    if (key_less(lo, id, root->lo, root->id)) {
      root->left = erase(root->left, lo, id, erased);
    } else {
      root->right = erase(root->right, lo, id, erased);
    }
    update(root);
    return root;
  }

  static void collect(const Node* n, std::uint64_t lo, std::uint64_t hi,
                      std::vector<CapId>& out) {
    if (!n || n->max_hi <= lo) return;
    collect(n->left, lo, hi, out);
    if (n->lo < hi && lo < n->hi) out.push_back(n->id);
    // Keys to the right start at or after n->lo; nothing there can overlap
    // once the query range ends at or before it.
    if (n->lo < hi) collect(n->right, lo, hi, out);
  }

  static void destroy(Node* n) {
    if (!n) return;
    destroy(n->left);
    destroy(n->right);
    delete n;
  }

  Node* root_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace capsim

#endif  // CAPSIM_INTERVAL_INDEX_HPP
