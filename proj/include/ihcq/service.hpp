// Copyright 2026-present the ihcq authors
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

#pragma once

#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ihcq/baseline.hpp"
#include "ihcq/error.hpp"
#include "ihcq/store.hpp"

// HTTP facade over the store. Handlers are stateless: everything a response
// depends on lives in the store, so a restarted service answers GETs
// identically.
namespace ihcq::service {

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

/// Machine codes: not_found, conflict, invalid_input, empty_dataset, and
/// internal for I/O faults.
struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
};

ApiError map_error(const Error& error);
Response error_response(const ApiError& error);

class Service {
public:
    explicit Service(store::Store& store, baseline::BaselineParams params = {});

    Response handle(const Request& request) const;

private:
    store::Store& store_;
    baseline::BaselineParams params_;
};

/// cpp-httplib server forwarding every /api request to a Service.
class HttpServer {
public:
    explicit HttpServer(const Service& service);
    ~HttpServer();

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    /// bind + listen on a background thread.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ihcq::service
