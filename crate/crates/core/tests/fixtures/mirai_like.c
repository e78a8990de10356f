static const char *ranges[] = {
    "1.0.%d.%d",
    "2.37.%d.%d",
    "5.74.%d.%d",
    "14.111.%d.%d",
    "27.148.%d.%d",
    "31.185.%d.%d",
    "36.222.%d.%d",
    "37.3.%d.%d",
    "39.40.%d.%d",
    "41.77.%d.%d",
    "42.114.%d.%d",
    "46.151.%d.%d",
    "49.188.%d.%d",
    "50.225.%d.%d",
    "58.6.%d.%d",
    "59.43.%d.%d",
    "60.80.%d.%d",
    "61.117.%d.%d",
    "77.154.%d.%d",
    "79.191.%d.%d",
    "80.228.%d.%d",
    "82.9.%d.%d",
    "85.46.%d.%d",
    "87.83.%d.%d",
    "89.120.%d.%d",
    "91.157.%d.%d",
    "93.194.%d.%d",
    "95.231.%d.%d",
    "101.12.%d.%d",
    "103.49.%d.%d",
    "105.86.%d.%d",
    "106.123.%d.%d",
    "109.160.%d.%d",
    "110.197.%d.%d",
    "112.234.%d.%d",
    "113.15.%d.%d",
    "115.52.%d.%d",
    "116.89.%d.%d",
    "117.126.%d.%d",
    "118.163.%d.%d",
    "119.200.%d.%d",
    "120.237.%d.%d",
    "121.18.%d.%d",
};
static const char *strs[] = {
    "/proc/net/tcp", "/proc/self/exe", "/dev/watchdog", "/etc/resolv.conf", "8.8.8.8",
    "attack_udp_generic", "attack_tcp_syn", "attack_app_http", "killer_init", "scanner_init", "table_unlock_val",
};

static long sys3(long n, long a, long b, long c)
{
    long r;
    __asm__ volatile ("syscall" : "=a"(r) : "a"(n), "D"(a), "S"(b), "d"(c) : "rcx", "r11", "memory");
    return r;
}

static unsigned long len(const char *s)
{
    unsigned long n = 0;
    while (s[n])
        n++;
    return n;
}

void _start(void)
{
    for (unsigned i = 0; i < sizeof ranges / sizeof *ranges; i++)
        sys3(1, -1, (long)ranges[i], len(ranges[i]));
    for (unsigned i = 0; i < sizeof strs / sizeof *strs; i++)
        sys3(1, -1, (long)strs[i], len(strs[i]));
    sys3(60, 0, 0, 0);
    for (;;)
        ;
}
