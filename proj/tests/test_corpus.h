/*
 * Copyright 2026 The glad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Labeled toy corpora shared by the unit tests and the acceptance binary.

#ifndef GLAD_TESTS_TEST_CORPUS_H_
#define GLAD_TESTS_TEST_CORPUS_H_

#include <string>
#include <vector>

#include "glad/common.h"

namespace glad::testing {

// 20 lines drawn from four templates with random parameters. The first
// template yields "FAILED LOGIN for <*> to <*>".
inline std::vector<std::string> FourTemplateCorpus(uint64_t seed = 3) {
  static const char* kUsers[] = {"della", "bob", "erin", "mallory", "trent"};
  static const char* kHosts[] = {"imap://localhost/", "imap://remote/", "imap://mail.example.org/"};
  static const char* kDisks[] = {"sda", "sdb", "nvme0"};
  Rng rng(seed);
  auto pick = [&](auto& pool) { return std::string(pool[rng.Below(std::size(pool))]); };
  std::vector<std::string> lines;
  lines.push_back("FAILED LOGIN for della to imap://localhost/");
  lines.push_back("FAILED LOGIN for bob to imap://remote/");
  for (int i = 2; i < 20; ++i) {
    switch (i % 4) {
      case 0:
        lines.push_back("FAILED LOGIN for " + pick(kUsers) + " to " + pick(kHosts));
        break;
      case 1:
        lines.push_back("session opened for user " + pick(kUsers) + " by uid " +
                        std::to_string(rng.Below(2000)));
        break;
      case 2:
        lines.push_back("connection from 10.0." + std::to_string(rng.Below(255)) + "." +
                        std::to_string(rng.Below(255)) + " port " +
                        std::to_string(1024 + rng.Below(60000)) + " closed");
        break;
      default:
        lines.push_back("disk usage on " + pick(kDisks) + " at " +
                        std::to_string(rng.Below(100)) + " percent");
        break;
    }
  }
  return lines;
}

}  // namespace glad::testing

#endif  // GLAD_TESTS_TEST_CORPUS_H_
