#pragma once

#include <functional>
#include <string>
#include <vector>

namespace semirl {

struct CheckRecord {
  std::string suite;
  std::string instance;
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

using CheckSink = std::function<void(const CheckRecord&)>;

std::string check_record_jsonl(const CheckRecord& record);

// Each suite runs its machine-checked properties, emits one record per check,
// and returns true iff every check passed.
bool verify_fp(const CheckSink& sink);
bool verify_decomposition(const CheckSink& sink);
bool verify_lemma1(const CheckSink& sink);
bool verify_lemma2(const CheckSink& sink);
bool verify_gradients(const CheckSink& sink);
bool verify_avg_identity(const CheckSink& sink);

bool verify_scope(const std::string& scope, const CheckSink& sink);
bool known_scope(const std::string& scope);

}  // namespace semirl
