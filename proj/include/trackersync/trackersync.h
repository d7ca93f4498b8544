#ifndef TRACKERSYNC_H
#define TRACKERSYNC_H

/* C interface to the trackersync library.
 *
 * Every fallible call returns a ts_status. On failure the thread's last error
 * message is available through ts_last_error_message() until the next call
 * on the same thread. Buffers and strings returned through out-parameters are
 * owned by the caller and released with ts_buffer_free / ts_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TS_API __declspec(dllexport)
#else
#define TS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_INVALID_ARGUMENT = 1,
  TS_BAD_HEX = 2,
  TS_MALFORMED_ESCAPE = 10,
  TS_BAD_CRC = 11,
  TS_TRUNCATED_FRAME = 12,
  TS_UNKNOWN_SECTION_LAYOUT = 13,
  TS_SECTION_ORDER_VIOLATION = 14,
  TS_OVERSIZE_PAYLOAD = 15,
  TS_ENCRYPTED_FRAME = 16,
  TS_BAD_BLOCK_LENGTH = 20,
  TS_NONCE_REUSE = 21,
  TS_BAD_TAG = 22,
  TS_BAD_LABEL = 23,
  TS_CLOCK_REGRESSION = 30,
  TS_CAPACITY_EXCEEDED = 31,
  TS_READ_PROTECTED = 32,
  TS_DEBUG_DISABLED = 33,
  TS_OUT_OF_RANGE = 34,
  TS_RESPONSE_MISMATCH = 35,
  TS_MALFORMED_ENVELOPE = 40,
  TS_GENERIC_INVALID = 41,
  TS_CRC_MISMATCH = 42,
  TS_LOCKED_OUT = 43,
  TS_UNKNOWN_TRACKER = 44,
  TS_UNKNOWN_USER = 45,
  TS_NO_DATA = 46,
  TS_CORRUPT_STORE = 47,
  TS_SERVER_ERROR = 50,
  TS_REJECTED_BY_SERVER = 51,
  TS_IO = 60,
  TS_INTERNAL = 99
} ts_status;

typedef struct ts_buffer {
  uint8_t* data;
  size_t len;
} ts_buffer;

TS_API const char* ts_status_string(ts_status status);
TS_API const char* ts_last_error_message(void);
TS_API const char* ts_version(void);
TS_API void ts_buffer_free(ts_buffer* buffer);
TS_API void ts_string_free(char* str);

/* Frame codec */
TS_API ts_status ts_escape(const uint8_t* data, size_t len, ts_buffer* out);
TS_API ts_status ts_unescape(const uint8_t* data, size_t len, ts_buffer* out);
TS_API uint16_t ts_crc_ccitt(const uint8_t* data, size_t len);
TS_API ts_status ts_dissect(const uint8_t* frame, size_t len, char** out);
TS_API ts_status ts_parse_hex_dump(const char* text, ts_buffer* out);

/* Crypto. Keys are 16 bytes, blocks and tags 8 bytes. */
TS_API ts_status ts_xtea_encrypt_block(const uint8_t key[16], const uint8_t in[8], uint8_t out[8]);
TS_API ts_status ts_xtea_decrypt_block(const uint8_t key[16], const uint8_t in[8], uint8_t out[8]);
TS_API ts_status ts_derive_subkey(const uint8_t key[16], const char* label, uint8_t out[16]);
TS_API ts_status ts_mac(const uint8_t subkey[16], const uint8_t* message, size_t len, uint8_t tag[8]);

/* Simulated tracker */
typedef struct ts_tracker ts_tracker;

TS_API ts_status ts_tracker_new(const char* serial_hex, const char* key_hex, int encrypted, ts_tracker** out);
TS_API ts_status ts_tracker_load(const char* eeprom_path, ts_tracker** out);
TS_API ts_status ts_tracker_save(const ts_tracker* tracker, const char* eeprom_path);
TS_API void ts_tracker_free(ts_tracker* tracker);
TS_API ts_status ts_tracker_record_steps(ts_tracker* tracker, int64_t at, uint32_t steps);
TS_API ts_status ts_tracker_generate_megadump(ts_tracker* tracker, ts_buffer* out);
TS_API ts_status ts_tracker_debug_read(const ts_tracker* tracker, size_t addr, size_t len, ts_buffer* out);
TS_API ts_status ts_tracker_debug_write(ts_tracker* tracker, size_t addr, const uint8_t* data, size_t len);
TS_API ts_status ts_tracker_set_protection(ts_tracker* tracker, int level);

/* Sync server and MITM forwarder, both served over HTTP on 127.0.0.1.
 *
 * Server config JSON (all keys optional):
 *   {"mode":"vulnerable"|"hardened", "port":0, "store":"path",
 *    "error_threshold":5, "lockout_seconds":3600,
 *    "max_daily_steps":100000, "max_steps_per_minute":300,
 *    "min_stride_m":0.2, "max_stride_m":2.5,
 *    "clock":"system"|"fixed:<unix seconds>",
 *    "accounts":[{"user":"...", "tracker":"HEX12", "key":"HEX32"}],
 *    "keystore":"path"} */
typedef struct ts_server ts_server;

TS_API ts_status ts_server_start(const char* config_json, ts_server** out);
/* hook: "identity", "double-steps", "double-steps-refresh-crc" */
TS_API ts_status ts_proxy_start(const char* upstream_url, int port, const char* hook, ts_server** out);
TS_API int ts_server_port(const ts_server* server);
/* Only for servers started with a fixed clock. */
TS_API ts_status ts_server_advance_clock(ts_server* server, int64_t seconds);
/* Blocks until ts_server_stop is called from another thread. */
TS_API void ts_server_wait(ts_server* server);
TS_API void ts_server_stop(ts_server* server);
TS_API void ts_server_free(ts_server* server);

/* Runs one scenario (request JSON as documented for ScenarioParams) against
 * server_url. report_json receives the verdict document; exit_code is 0 when
 * the expectation was met, 1 when not, 2 on scenario error. A TS_OK return
 * means the report was produced, not that the expectation was met. */
TS_API ts_status ts_scenario_run(const char* server_url, const char* request_json, char** report_json,
                                 int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
