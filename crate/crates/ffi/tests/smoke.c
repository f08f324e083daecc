#include <stdio.h>
#include <string.h>

#include "fpauth.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    FpaStatus st_ = (expr);                                                \
    if (st_ != FPA_STATUS_OK) {                                            \
      char msg[256];                                                       \
      fpa_last_error_message(msg, sizeof msg);                             \
      fprintf(stderr, "%s:%d: status %d: %s\n", __FILE__, __LINE__, st_, msg); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  enum { ROWS = 32, COLS = 32 };
  uint8_t px[ROWS * COLS];
  for (int i = 0; i < ROWS * COLS; i++) px[i] = (uint8_t)(i * 13 % 256);

  FpaKey *key = NULL;
  FpaImage *img = NULL, *signed_img = NULL;
  FpaMask *mask = NULL;

  CHECK(fpa_key_random(11, FPA_SCAN_MODE_CAUSAL_FORWARD, 0.7, 10, 90, &key));
  CHECK(fpa_image_new(ROWS, COLS, px, &img));
  CHECK(fpa_generate(img, key, &signed_img));
  CHECK(fpa_verify(signed_img, key, &mask));
  if (fpa_mask_count(mask) != 0) {
    fprintf(stderr, "signed image flagged\n");
    return 1;
  }
  fpa_mask_free(mask);

  const uint8_t *data = fpa_image_pixels(signed_img);
  CHECK(fpa_image_set(signed_img, 10, 10, (uint8_t)(data[10 * COLS + 10] ^ 0x80)));
  CHECK(fpa_verify(signed_img, key, &mask));
  size_t flagged = fpa_mask_count(mask);
  if (flagged > 5) {
    fprintf(stderr, "too many flags: %zu\n", flagged);
    return 1;
  }

  if (fpa_key_parse("not a key", &key) != FPA_STATUS_PARSE) return 1;

  double db = 0;
  CHECK(fpa_psnr(img, img, &db));
  printf("ok flagged=%zu\n", flagged);

  fpa_mask_free(mask);
  fpa_image_free(signed_img);
  fpa_image_free(img);
  fpa_key_free(key);
  return 0;
}
