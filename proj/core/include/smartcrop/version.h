#pragma once

#define SMARTCROP_VERSION "0.1.0"
