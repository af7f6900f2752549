/* Maximum-weight matching (max-cardinality mode) on small dense graphs.
 *
 * Array-based primal-dual blossom algorithm, O(V^3).  The caller negates /
 * shifts weights to obtain minimum-weight perfect matchings.  Single
 * threaded; the Python wrapper serializes calls per process.
 *
 * Build: cc -O2 -shared -fPIC -o _mwpm.so _mwpm.c
 */

#include <stdlib.h>
#include <string.h>

typedef double W;

typedef struct {
    int nvertex, nedge, nslot;
    const int *e_i, *e_j;
    const W *wt;
    W maxweight;

    int *mate;        /* vertex -> endpoint (2k or 2k+1) or -1 */
    int *label;       /* slot -> 0 free, 1 S, 2 T (plus breadcrumb 5) */
    int *labelend;    /* slot -> endpoint or -1 */
    int *inblossom;   /* vertex -> top-level blossom */
    int *blossomparent;
    int *blossombase;
    int *bestedge;
    W   *dualvar;
    unsigned char *allowedge;

    int **childs;     /* blossom -> child list */
    int **endps;      /* blossom -> endpoint list */
    int  *nchilds;
    int **bestedges;  /* blossom -> least-slack edge list */
    int  *nbestedges;

    int *unused; int nunused;
    int *queue; int qlen;
    int *endpoint;    /* endpoint p -> vertex */
    int **neighbend; int *nneighbend;

    int *leafbuf;     /* scratch for leaf enumeration */
} Ctx;

static W slack(Ctx *c, int k)
{
    return c->dualvar[c->e_i[k]] + c->dualvar[c->e_j[k]] - 2.0 * c->wt[k];
}

/* Collect the vertex leaves of blossom b into c->leafbuf, returns count. */
static int blossom_leaves(Ctx *c, int b, int *out)
{
    int n = 0;
    int stack_static[64];
    int *stack = stack_static;
    int cap = 64, top = 0;
    stack[top++] = b;
    while (top) {
        int t = stack[--top];
        if (t < c->nvertex) {
            out[n++] = t;
        } else {
            for (int i = 0; i < c->nchilds[t]; i++) {
                if (top == cap) {
                    cap *= 2;
                    if (stack == stack_static) {
                        stack = malloc(cap * sizeof(int));
                        memcpy(stack, stack_static, top * sizeof(int));
                    } else {
                        stack = realloc(stack, cap * sizeof(int));
                    }
                }
                stack[top++] = c->childs[t][i];
            }
        }
    }
    if (stack != stack_static) free(stack);
    return n;
}

static void assign_label(Ctx *c, int w, int t, int p)
{
    int b = c->inblossom[w];
    c->label[w] = t; c->label[b] = t;
    c->labelend[w] = p; c->labelend[b] = p;
    c->bestedge[w] = -1; c->bestedge[b] = -1;
    if (t == 1) {
        int n = blossom_leaves(c, b, c->leafbuf);
        for (int i = 0; i < n; i++) c->queue[c->qlen++] = c->leafbuf[i];
    } else if (t == 2) {
        int base = c->blossombase[b];
        assign_label(c, c->endpoint[c->mate[base]], 1, c->mate[base] ^ 1);
    }
}

static int scan_blossom(Ctx *c, int v, int w)
{
    int path[4096]; int npath = 0;
    int base = -1;
    while (v != -1 || w != -1) {
        int b = c->inblossom[v];
        if (c->label[b] & 4) { base = c->blossombase[b]; break; }
        path[npath++] = b;
        c->label[b] = 5;
        if (c->labelend[b] == -1) {
            v = -1;
        } else {
            v = c->endpoint[c->labelend[b]];
            b = c->inblossom[v];
            v = c->endpoint[c->labelend[b]];
        }
        if (w != -1) { int tmp = v; v = w; w = tmp; }
    }
    for (int i = 0; i < npath; i++) c->label[path[i]] = 1;
    return base;
}

static void add_blossom(Ctx *c, int base, int k)
{
    int v = c->e_i[k], w = c->e_j[k];
    int bb = c->inblossom[base];
    int bv = c->inblossom[v];
    int bw = c->inblossom[w];
    int b = c->unused[--c->nunused];
    c->blossombase[b] = base;
    c->blossomparent[b] = -1;
    c->blossomparent[bb] = b;

    int cap = 8;
    int *path = malloc(cap * sizeof(int));
    int *endps = malloc((cap + 1) * sizeof(int));
    int np = 0;

    while (bv != bb) {
        if (np == cap) {
            cap *= 2;
            path = realloc(path, cap * sizeof(int));
            endps = realloc(endps, (cap + 1) * sizeof(int));
        }
        c->blossomparent[bv] = b;
        path[np] = bv;
        endps[np] = c->labelend[bv];
        np++;
        v = c->endpoint[c->labelend[bv]];
        bv = c->inblossom[v];
    }
    /* reverse, then append bb at the front */
    {
        int total = np + 1;
        int *rp = malloc((total * 2 + 2) * sizeof(int));
        int *re = malloc((total * 2 + 2) * sizeof(int));
        int m = 0;
        rp[m] = bb; m++;
        for (int i = np - 1; i >= 0; i--) { rp[m] = path[i]; re[m - 1] = endps[i]; m++; }
        re[m - 1] = 2 * k;
        /* trace back from w */
        int capm = total * 2 + 2;
        while (bw != bb) {
            if (m == capm) {
                capm *= 2;
                rp = realloc(rp, capm * sizeof(int));
                re = realloc(re, capm * sizeof(int));
            }
            c->blossomparent[bw] = b;
            rp[m] = bw;
            re[m] = c->labelend[bw] ^ 1;
            m++;
            w = c->endpoint[c->labelend[bw]];
            bw = c->inblossom[w];
        }
        free(path); free(endps);
        c->childs[b] = rp;
        c->endps[b] = re;
        c->nchilds[b] = m;
    }

    c->label[b] = 1;
    c->labelend[b] = c->labelend[bb];
    c->dualvar[b] = 0.0;

    int n = blossom_leaves(c, b, c->leafbuf);
    for (int i = 0; i < n; i++) {
        int lv = c->leafbuf[i];
        if (c->label[c->inblossom[lv]] == 2)
            c->queue[c->qlen++] = lv;
        c->inblossom[lv] = b;
    }

    /* compute least-slack edges to other S-blossoms */
    int *bestedgeto = malloc(c->nslot * sizeof(int));
    for (int i = 0; i < c->nslot; i++) bestedgeto[i] = -1;
    for (int ci = 0; ci < c->nchilds[b]; ci++) {
        int cbv = c->childs[b][ci];
        if (c->bestedges[cbv] == NULL) {
            int nl = blossom_leaves(c, cbv, c->leafbuf);
            for (int li = 0; li < nl; li++) {
                int lv = c->leafbuf[li];
                for (int pi = 0; pi < c->nneighbend[lv]; pi++) {
                    int kk = c->neighbend[lv][pi] / 2;
                    int j = c->e_j[kk];
                    if (c->inblossom[j] == b) j = c->e_i[kk];
                    int bj = c->inblossom[j];
                    if (bj != b && c->label[bj] == 1 &&
                        (bestedgeto[bj] == -1 || slack(c, kk) < slack(c, bestedgeto[bj])))
                        bestedgeto[bj] = kk;
                }
            }
        } else {
            for (int li = 0; li < c->nbestedges[cbv]; li++) {
                int kk = c->bestedges[cbv][li];
                int j = c->e_j[kk];
                if (c->inblossom[j] == b) j = c->e_i[kk];
                int bj = c->inblossom[j];
                if (bj != b && c->label[bj] == 1 &&
                    (bestedgeto[bj] == -1 || slack(c, kk) < slack(c, bestedgeto[bj])))
                    bestedgeto[bj] = kk;
            }
        }
        if (c->bestedges[cbv]) { free(c->bestedges[cbv]); c->bestedges[cbv] = NULL; }
        c->nbestedges[cbv] = 0;
        c->bestedge[cbv] = -1;
    }
    {
        int cnt = 0;
        for (int i = 0; i < c->nslot; i++) if (bestedgeto[i] != -1) cnt++;
        c->bestedges[b] = malloc((cnt > 0 ? cnt : 1) * sizeof(int));
        c->nbestedges[b] = cnt;
        cnt = 0;
        for (int i = 0; i < c->nslot; i++)
            if (bestedgeto[i] != -1) c->bestedges[b][cnt++] = bestedgeto[i];
    }
    free(bestedgeto);
    c->bestedge[b] = -1;
    for (int i = 0; i < c->nbestedges[b]; i++) {
        int kk = c->bestedges[b][i];
        if (c->bestedge[b] == -1 || slack(c, kk) < slack(c, c->bestedge[b]))
            c->bestedge[b] = kk;
    }
}

static void expand_blossom(Ctx *c, int b, int endstage)
{
    for (int i = 0; i < c->nchilds[b]; i++) {
        int s = c->childs[b][i];
        c->blossomparent[s] = -1;
        if (s < c->nvertex) {
            c->inblossom[s] = s;
        } else if (endstage && c->dualvar[s] == 0.0) {
            expand_blossom(c, s, endstage);
        } else {
            int n = blossom_leaves(c, s, c->leafbuf);
            for (int li = 0; li < n; li++) c->inblossom[c->leafbuf[li]] = s;
        }
    }
    if (!endstage && c->label[b] == 2) {
        int entrychild = c->inblossom[c->endpoint[c->labelend[b] ^ 1]];
        int j = 0;
        for (int i = 0; i < c->nchilds[b]; i++)
            if (c->childs[b][i] == entrychild) { j = i; break; }
        int jstep, endptrick;
        int nch = c->nchilds[b];
        if (j & 1) { j -= nch; jstep = 1; endptrick = 0; }
        else { jstep = -1; endptrick = 1; }
        int p = c->labelend[b];
        /* index helper: childs/endps with python-style negative wrap */
        #define CH(x) c->childs[b][((x) % nch + nch) % nch]
        #define EP(x) c->endps[b][((x) % nch + nch) % nch]
        while (j != 0) {
            c->label[c->endpoint[p ^ 1]] = 0;
            c->label[c->endpoint[EP(j - endptrick) ^ endptrick ^ 1]] = 0;
            assign_label(c, c->endpoint[p ^ 1], 2, p);
            c->allowedge[EP(j - endptrick) / 2] = 1;
            j += jstep;
            p = EP(j - endptrick) ^ endptrick;
            c->allowedge[p / 2] = 1;
            j += jstep;
        }
        {
            int bv = CH(j);
            c->label[c->endpoint[p ^ 1]] = 2;
            c->label[bv] = 2;
            c->labelend[c->endpoint[p ^ 1]] = p;
            c->labelend[bv] = p;
            c->bestedge[bv] = -1;
            j += jstep;
            while (CH(j) != entrychild) {
                int bv2 = CH(j);
                if (c->label[bv2] == 1) { j += jstep; continue; }
                int n = blossom_leaves(c, bv2, c->leafbuf);
                int vfound = -1;
                for (int li = 0; li < n; li++)
                    if (c->label[c->leafbuf[li]] != 0) { vfound = c->leafbuf[li]; break; }
                if (vfound != -1) {
                    c->label[vfound] = 0;
                    c->label[c->endpoint[c->mate[c->blossombase[bv2]]]] = 0;
                    assign_label(c, vfound, 2, c->labelend[vfound]);
                }
                j += jstep;
            }
        }
        #undef CH
        #undef EP
    }
    c->label[b] = -1;
    c->labelend[b] = -1;
    free(c->childs[b]); c->childs[b] = NULL;
    free(c->endps[b]); c->endps[b] = NULL;
    c->nchilds[b] = 0;
    c->blossombase[b] = -1;
    if (c->bestedges[b]) { free(c->bestedges[b]); c->bestedges[b] = NULL; }
    c->nbestedges[b] = 0;
    c->bestedge[b] = -1;
    c->unused[c->nunused++] = b;
}

static void augment_blossom(Ctx *c, int b, int v)
{
    int t = v;
    while (c->blossomparent[t] != b) t = c->blossomparent[t];
    if (t >= c->nvertex) augment_blossom(c, t, v);
    int nch = c->nchilds[b];
    int i = 0;
    for (int x = 0; x < nch; x++) if (c->childs[b][x] == t) { i = x; break; }
    int j = i, jstep, endptrick;
    if (i & 1) { j -= nch; jstep = 1; endptrick = 0; }
    else { jstep = -1; endptrick = 1; }
    #define CH(x) c->childs[b][((x) % nch + nch) % nch]
    #define EP(x) c->endps[b][((x) % nch + nch) % nch]
    while (j != 0) {
        j += jstep;
        int tt = CH(j);
        int p = EP(j - endptrick) ^ endptrick;
        if (tt >= c->nvertex) augment_blossom(c, tt, c->endpoint[p]);
        j += jstep;
        tt = CH(j);
        if (tt >= c->nvertex) augment_blossom(c, tt, c->endpoint[p ^ 1]);
        c->mate[c->endpoint[p]] = p ^ 1;
        c->mate[c->endpoint[p ^ 1]] = p;
    }
    #undef CH
    #undef EP
    /* rotate child lists so the new base is first */
    if (i > 0) {
        int *nc = malloc(nch * sizeof(int));
        int *ne = malloc(nch * sizeof(int));
        for (int x = 0; x < nch; x++) {
            nc[x] = c->childs[b][(x + i) % nch];
            ne[x] = c->endps[b][(x + i) % nch];
        }
        memcpy(c->childs[b], nc, nch * sizeof(int));
        memcpy(c->endps[b], ne, nch * sizeof(int));
        free(nc); free(ne);
    }
    c->blossombase[b] = c->blossombase[c->childs[b][0]];
}

static void augment_matching(Ctx *c, int k)
{
    int starts[2][2] = {{c->e_i[k], 2 * k + 1}, {c->e_j[k], 2 * k}};
    for (int si = 0; si < 2; si++) {
        int s = starts[si][0];
        int p = starts[si][1];
        for (;;) {
            int bs = c->inblossom[s];
            if (bs >= c->nvertex) augment_blossom(c, bs, s);
            c->mate[s] = p;
            if (c->labelend[bs] == -1) break;
            int t = c->endpoint[c->labelend[bs]];
            int bt = c->inblossom[t];
            s = c->endpoint[c->labelend[bt]];
            int j = c->endpoint[c->labelend[bt] ^ 1];
            if (bt >= c->nvertex) augment_blossom(c, bt, j);
            c->mate[j] = c->labelend[bt];
            p = c->labelend[bt] ^ 1;
        }
    }
}

/* Entry point: max-cardinality maximum-weight matching.
 * mate_out[v] = partner vertex or -1.  Returns 0 on success. */
int mwpm_solve(int nvertex, int nedge, const int *e_i, const int *e_j,
               const W *wt, int *mate_out)
{
    if (nvertex == 0) return 0;
    Ctx ctx; Ctx *c = &ctx;
    memset(c, 0, sizeof(Ctx));
    c->nvertex = nvertex; c->nedge = nedge;
    c->nslot = 2 * nvertex;
    c->e_i = e_i; c->e_j = e_j; c->wt = wt;
    c->maxweight = 0.0;
    for (int k = 0; k < nedge; k++) if (wt[k] > c->maxweight) c->maxweight = wt[k];

    c->mate = malloc(nvertex * sizeof(int));
    c->label = calloc(c->nslot, sizeof(int));
    c->labelend = malloc(c->nslot * sizeof(int));
    c->inblossom = malloc(nvertex * sizeof(int));
    c->blossomparent = malloc(c->nslot * sizeof(int));
    c->blossombase = malloc(c->nslot * sizeof(int));
    c->bestedge = malloc(c->nslot * sizeof(int));
    c->dualvar = malloc(c->nslot * sizeof(W));
    c->allowedge = calloc(nedge > 0 ? nedge : 1, 1);
    c->childs = calloc(c->nslot, sizeof(int *));
    c->endps = calloc(c->nslot, sizeof(int *));
    c->nchilds = calloc(c->nslot, sizeof(int));
    c->bestedges = calloc(c->nslot, sizeof(int *));
    c->nbestedges = calloc(c->nslot, sizeof(int));
    c->unused = malloc(nvertex * sizeof(int));
    c->queue = malloc((size_t)c->nslot * (nvertex + 2) * sizeof(int));
    c->endpoint = malloc(2 * (nedge > 0 ? nedge : 1) * sizeof(int));
    c->neighbend = calloc(nvertex, sizeof(int *));
    c->nneighbend = calloc(nvertex, sizeof(int));
    c->leafbuf = malloc(nvertex * sizeof(int));

    for (int v = 0; v < nvertex; v++) {
        c->mate[v] = -1;
        c->inblossom[v] = v;
        c->blossombase[v] = v;
        c->dualvar[v] = c->maxweight;
    }
    for (int b = nvertex; b < c->nslot; b++) {
        c->blossombase[b] = -1;
        c->dualvar[b] = 0.0;
        c->unused[c->nunused++] = b;
    }
    for (int i = 0; i < c->nslot; i++) {
        c->labelend[i] = -1;
        c->blossomparent[i] = -1;
        c->bestedge[i] = -1;
    }
    for (int k = 0; k < nedge; k++) {
        c->endpoint[2 * k] = e_i[k];
        c->endpoint[2 * k + 1] = e_j[k];
        c->nneighbend[e_i[k]]++;
        c->nneighbend[e_j[k]]++;
    }
    {
        int *fill = calloc(nvertex, sizeof(int));
        for (int v = 0; v < nvertex; v++)
            c->neighbend[v] = malloc((c->nneighbend[v] > 0 ? c->nneighbend[v] : 1) * sizeof(int));
        for (int k = 0; k < nedge; k++) {
            c->neighbend[e_i[k]][fill[e_i[k]]++] = 2 * k + 1;
            c->neighbend[e_j[k]][fill[e_j[k]]++] = 2 * k;
        }
        free(fill);
    }

    for (int stage = 0; stage < nvertex; stage++) {
        memset(c->label, 0, c->nslot * sizeof(int));
        for (int i = 0; i < c->nslot; i++) c->bestedge[i] = -1;
        for (int b = nvertex; b < c->nslot; b++) {
            if (c->bestedges[b]) { free(c->bestedges[b]); c->bestedges[b] = NULL; }
            c->nbestedges[b] = 0;
        }
        memset(c->allowedge, 0, nedge);
        c->qlen = 0;
        for (int v = 0; v < nvertex; v++)
            if (c->mate[v] == -1 && c->label[c->inblossom[v]] == 0)
                assign_label(c, v, 1, -1);
        int augmented = 0;
        for (;;) {
            while (c->qlen > 0 && !augmented) {
                int v = c->queue[--c->qlen];
                for (int pi = 0; pi < c->nneighbend[v]; pi++) {
                    int p = c->neighbend[v][pi];
                    int k = p / 2;
                    int w = c->endpoint[p];
                    if (c->inblossom[v] == c->inblossom[w]) continue;
                    W kslack = 0.0;
                    if (!c->allowedge[k]) {
                        kslack = slack(c, k);
                        if (kslack <= 0.0) c->allowedge[k] = 1;
                    }
                    if (c->allowedge[k]) {
                        if (c->label[c->inblossom[w]] == 0) {
                            assign_label(c, w, 2, p ^ 1);
                        } else if (c->label[c->inblossom[w]] == 1) {
                            int base = scan_blossom(c, v, w);
                            if (base >= 0) {
                                add_blossom(c, base, k);
                            } else {
                                augment_matching(c, k);
                                augmented = 1;
                                break;
                            }
                        } else if (c->label[w] == 0) {
                            c->label[w] = 2;
                            c->labelend[w] = p ^ 1;
                        }
                    } else if (c->label[c->inblossom[w]] == 1) {
                        int b = c->inblossom[v];
                        if (c->bestedge[b] == -1 || kslack < slack(c, c->bestedge[b]))
                            c->bestedge[b] = k;
                    } else if (c->label[w] == 0) {
                        if (c->bestedge[w] == -1 || kslack < slack(c, c->bestedge[w]))
                            c->bestedge[w] = k;
                    }
                }
            }
            if (augmented) break;

            int deltatype = -1, deltaedge = -1, deltablossom = -1;
            W delta = 0.0;
            /* max-cardinality mode: skip delta1 until forced */
            for (int v = 0; v < nvertex; v++) {
                if (c->label[c->inblossom[v]] == 0 && c->bestedge[v] != -1) {
                    W d = slack(c, c->bestedge[v]);
                    if (deltatype == -1 || d < delta) {
                        delta = d; deltatype = 2; deltaedge = c->bestedge[v];
                    }
                }
            }
            for (int b = 0; b < c->nslot; b++) {
                if (c->blossomparent[b] == -1 && c->label[b] == 1 &&
                    c->bestedge[b] != -1) {
                    W d = slack(c, c->bestedge[b]) / 2.0;
                    if (deltatype == -1 || d < delta) {
                        delta = d; deltatype = 3; deltaedge = c->bestedge[b];
                    }
                }
            }
            for (int b = nvertex; b < c->nslot; b++) {
                if (c->blossombase[b] >= 0 && c->blossomparent[b] == -1 &&
                    c->label[b] == 2 && (deltatype == -1 || c->dualvar[b] < delta)) {
                    delta = c->dualvar[b]; deltatype = 4; deltablossom = b;
                }
            }
            if (deltatype == -1) {
                deltatype = 1;
                W dmin = c->dualvar[0];
                for (int v = 1; v < nvertex; v++)
                    if (c->dualvar[v] < dmin) dmin = c->dualvar[v];
                delta = dmin > 0.0 ? dmin : 0.0;
            }
            for (int v = 0; v < nvertex; v++) {
                int lb = c->label[c->inblossom[v]];
                if (lb == 1) c->dualvar[v] -= delta;
                else if (lb == 2) c->dualvar[v] += delta;
            }
            for (int b = nvertex; b < c->nslot; b++) {
                if (c->blossombase[b] >= 0 && c->blossomparent[b] == -1) {
                    if (c->label[b] == 1) c->dualvar[b] += delta;
                    else if (c->label[b] == 2) c->dualvar[b] -= delta;
                }
            }
            if (deltatype == 1) break;
            else if (deltatype == 2) {
                c->allowedge[deltaedge] = 1;
                int i = c->e_i[deltaedge];
                if (c->label[c->inblossom[i]] == 0) i = c->e_j[deltaedge];
                c->queue[c->qlen++] = i;
            } else if (deltatype == 3) {
                c->allowedge[deltaedge] = 1;
                c->queue[c->qlen++] = c->e_i[deltaedge];
            } else {
                expand_blossom(c, deltablossom, 0);
            }
        }
        if (!augmented) break;
        for (int b = nvertex; b < c->nslot; b++) {
            if (c->blossomparent[b] == -1 && c->blossombase[b] >= 0 &&
                c->label[b] == 1 && c->dualvar[b] == 0.0)
                expand_blossom(c, b, 1);
        }
    }

    for (int v = 0; v < nvertex; v++)
        mate_out[v] = (c->mate[v] >= 0) ? c->endpoint[c->mate[v]] : -1;

    for (int v = 0; v < nvertex; v++) free(c->neighbend[v]);
    for (int b = 0; b < c->nslot; b++) {
        if (c->childs[b]) free(c->childs[b]);
        if (c->endps[b]) free(c->endps[b]);
        if (c->bestedges[b]) free(c->bestedges[b]);
    }
    free(c->mate); free(c->label); free(c->labelend); free(c->inblossom);
    free(c->blossomparent); free(c->blossombase); free(c->bestedge);
    free(c->dualvar); free(c->allowedge); free(c->childs); free(c->endps);
    free(c->nchilds); free(c->bestedges); free(c->nbestedges); free(c->unused);
    free(c->queue); free(c->endpoint); free(c->neighbend); free(c->nneighbend);
    free(c->leafbuf);
    return 0;
}
