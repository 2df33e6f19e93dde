/* Preloadable fopen interposer: fail opens whose path contains a needle.
 *
 * The needle comes from FOPEN_SHIM_NEEDLE, read once when the library is
 * loaded; unset means "test", empty disables interception entirely.  A
 * matching open returns NULL with errno set rather than a poisoned
 * non-NULL sentinel, so callers that check the return value stay safe.
 */

#define _GNU_SOURCE

#include <dlfcn.h>
#include <errno.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define NEEDLE_MAX 256

typedef FILE *(*fopen_fn)(const char *, const char *);

static fopen_fn real_fopen;
static char needle[NEEDLE_MAX];
static int intercept_enabled;

static fopen_fn resolve_next_fopen(void)
{
    /* a union sidesteps the object-to-function pointer cast dlsym forces */
    union { void *obj; fopen_fn fn; } next;

    next.obj = dlsym(RTLD_NEXT, "fopen");
    if (next.obj == NULL) {
        const char *why = dlerror();
        fprintf(stderr, "fopen_shim: cannot resolve next fopen: %s\n",
                why != NULL ? why : "unknown error");
    }
    return next.fn;
}

__attribute__((constructor))
static void shim_init(void)
{
    const char *configured = getenv("FOPEN_SHIM_NEEDLE");

    if (configured == NULL)
        configured = "test";
    strncpy(needle, configured, NEEDLE_MAX - 1);
    needle[NEEDLE_MAX - 1] = '\0';
    intercept_enabled = needle[0] != '\0';
    real_fopen = resolve_next_fopen();
}

FILE *fopen(const char *path, const char *mode)
{
    if (intercept_enabled && path != NULL && strstr(path, needle) != NULL) {
        errno = EACCES;
        return NULL;
    }
    if (real_fopen == NULL) {
        /* called before the constructor ran, or resolution failed; retry.
         * The unsynchronized store is benign: every racer writes the same
         * value, and nothing else here mutates after load. */
        real_fopen = resolve_next_fopen();
        if (real_fopen == NULL) {
            errno = ENOSYS;
            return NULL;
        }
    }
    return real_fopen(path, mode);
}
