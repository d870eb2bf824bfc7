#pragma once

#include "ssdb/client.hpp"
#include "ssdb/cluster.hpp"
#include "ssdb/encoding.hpp"
#include "ssdb/error.hpp"
#include "ssdb/field.hpp"
#include "ssdb/hub.hpp"
#include "ssdb/net.hpp"
#include "ssdb/protocol.hpp"
#include "ssdb/query.hpp"
#include "ssdb/random.hpp"
#include "ssdb/server.hpp"
#include "ssdb/shamir.hpp"
#include "ssdb/storage.hpp"
