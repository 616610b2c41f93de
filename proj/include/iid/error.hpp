// Copyright 2026 The IID Authors. All Rights Reserved.
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

#ifndef IID_ERROR_HPP
#define IID_ERROR_HPP

#include <stdexcept>
#include <string>

namespace iid {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  explicit InvalidParameter(const std::string& what) : Error("invalid parameter: " + what) {}
};

class InvalidInput : public Error {
public:
  explicit InvalidInput(const std::string& what) : Error("invalid input: " + what) {}
};

class LoadError : public Error {
public:
  explicit LoadError(const std::string& what) : Error("load error: " + what) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

class GenerationError : public Error {
public:
  explicit GenerationError(const std::string& what) : Error("generation error: " + what) {}
};

}  // namespace iid

#endif  // IID_ERROR_HPP
