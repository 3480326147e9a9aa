/* Plain C client: the header must compile as C and a short episode must run. */
#include <stdio.h>
#include <stdlib.h>

#include "swarmgrid/swarmgrid.h"

#define EXPECT(cond)                                           \
  do {                                                         \
    if (!(cond)) {                                             \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, sg_last_error()); \
      return 1;                                                \
    }                                                          \
  } while (0)

int main(void) {
  sg_env* env = NULL;
  uint32_t actions[64];
  size_t pred = 0, prey = 0, i;
  int done = 0, steps = 0;

  EXPECT(sg_env_open("tiny-pursuit", &env) == SG_OK);
  EXPECT(sg_env_population(env, 0, &pred) == SG_OK);
  EXPECT(sg_env_population(env, 1, &prey) == SG_OK);
  while (!done) {
    for (i = 0; i < pred + prey; ++i) actions[i] = (uint32_t)(i + steps) % 3u;
    EXPECT(sg_env_step(env, actions, pred + prey, &done) == SG_OK);
    EXPECT(sg_env_population(env, 0, &pred) == SG_OK);
    EXPECT(sg_env_population(env, 1, &prey) == SG_OK);
    ++steps;
  }
  EXPECT(steps == 25);
  EXPECT(sg_env_step(env, actions, pred + prey, &done) == SG_ERR_STATE);
  sg_env_destroy(env);
  puts("ok");
  return 0;
}
