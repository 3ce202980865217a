#include <stdio.h>
#include <string.h>

#include "netplan.h"

static const char *RESNET18 =
    "network resnet18\n"
    "layer name=L1 ifm_w=112 ifm_h=112 k_w=7 k_h=7 in_ch=3 out_ch=64\n"
    "layer name=L2 ifm_w=56 ifm_h=56 k_w=3 k_h=3 in_ch=64 out_ch=64\n"
    "layer name=L3 ifm_w=28 ifm_h=28 k_w=3 k_h=3 in_ch=128 out_ch=128\n"
    "layer name=L4 ifm_w=14 ifm_h=14 k_w=3 k_h=3 in_ch=256 out_ch=256\n"
    "layer name=L5 ifm_w=7 ifm_h=7 k_w=3 k_h=3 in_ch=512 out_ch=512\n";

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            fprintf(stderr, "check failed: %s (%s)\n", #cond,           \
                    netplan_last_error());                              \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(void) {
    NetplanLayer layer = {14, 14, 3, 3, 256, 256};
    NetplanArray array = {512, 512};
    NetplanPlan plan;
    CHECK(netplan_plan_layer(&layer, &array, NETPLAN_METHOD_VW_SDK, &plan) == NETPLAN_STATUS_OK);
    CHECK(plan.pw_w == 4 && plan.pw_h == 3 && plan.ic_tile == 42 && plan.total_cycles == 504);

    NetplanLayer bad = {2, 2, 3, 3, 1, 1};
    CHECK(netplan_plan_layer(&bad, &array, NETPLAN_METHOD_IM2COL, &plan) == NETPLAN_STATUS_INVALID_ARGUMENT);
    CHECK(strstr(netplan_last_error(), "exceeds IFM") != NULL);

    NetplanNetwork *net = NULL;
    CHECK(netplan_network_parse(RESNET18, &net) == NETPLAN_STATUS_OK);
    size_t n = netplan_network_layer_count(net);
    CHECK(n == 5);
    NetplanPlan plans[5];
    uint64_t total = 0;
    CHECK(netplan_network_plan(net, &array, NETPLAN_METHOD_VW_SDK, plans, n, &total) == NETPLAN_STATUS_OK);
    CHECK(total == 4294);
    CHECK(netplan_network_plan(net, &array, NETPLAN_METHOD_SDK, plans, n, &total) == NETPLAN_STATUS_OK);
    CHECK(total == 7240);
    netplan_network_free(net);

    uint64_t measured = 0;
    NetplanLayer small = {5, 5, 3, 3, 2, 6};
    NetplanArray tiny = {8, 4};
    CHECK(netplan_verify_layer(&small, &tiny, NETPLAN_METHOD_VW_SDK, 7, &measured) == NETPLAN_STATUS_OK);

    printf("ok %llu\n", (unsigned long long)total);
    return 0;
}
