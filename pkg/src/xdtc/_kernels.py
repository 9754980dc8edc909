"""Compiled inner loops of the collapsed sampler.

One routine computes the unnormalized conditional for a token; the sweep
kernel and the Python-facing conditional() both call it, so the published
probabilities are exactly what the sampler draws from.  All tables arrive at
the minus-token state and are mutated in place by the sweep.
"""

from __future__ import annotations

from numba import njit

# Cell enumeration, fixed everywhere: for each label l in [lo_l, hi_l),
# common topics 0..t_common-1 (r=0) first, then specific topics 0..ts-1
# (r=1) of the document's own domain.


@njit(cache=True)
def token_probs(d, w, m, lo_l, hi_l,
                n_w_common, n_common, n_w_spec, n_spec,
                n_zc, n_zs, n_rl, n_l,
                alpha, beta, gamma, eta,
                t_common, ts, vocab_size, ccl, probs):
    """Fill probs[0:n_cells] with the unnormalized conditional; return
    (n_cells, total).  Factors shared by every cell (the n_d denominators)
    are dropped; they cancel on normalization."""
    idx = 0
    total = 0.0
    for l in range(lo_l, hi_l):
        lab = n_l[d, l] + eta
        type_den = n_l[d, l] + 2.0 * gamma
        p_com = lab * (n_rl[d, l, 0] + gamma) / type_den
        p_spec = lab * (n_rl[d, l, 1] + gamma) / type_den
        merged_den = n_l[d, l] + t_common * alpha
        com_den = n_rl[d, l, 0] + t_common * alpha
        spec_den = n_rl[d, l, 1] + ts * alpha
        for c in range(t_common):
            if ccl:
                topic = (n_zc[d, l, c] + n_zs[d, l, c] + alpha) / merged_den
            else:
                topic = (n_zc[d, l, c] + alpha) / com_den
            word = (n_w_common[l, c, w] + beta) / (n_common[l, c] + vocab_size * beta)
            p = p_com * topic * word
            probs[idx] = p
            total += p
            idx += 1
        for s in range(ts):
            if ccl:
                topic = (n_zc[d, l, s] + n_zs[d, l, s] + alpha) / merged_den
            else:
                topic = (n_zs[d, l, s] + alpha) / spec_den
            word = (n_w_spec[m, l, s, w] + beta) / (n_spec[m, l, s] + vocab_size * beta)
            p = p_spec * topic * word
            probs[idx] = p
            total += p
            idx += 1
    return idx, total


@njit(cache=True)
def sweep_kernel(order, tok_word, tok_doc, doc_domain, fixed_label,
                 l_arr, r_arr, z_arr,
                 n_w_common, n_common, n_w_spec, n_spec,
                 n_zc, n_zs, n_rl, n_l,
                 alpha, beta, gamma, eta,
                 t_common, t_spec, n_groups, vocab_size, ccl,
                 rng, probs):
    """One pass over `order`: per token decrement, draw from the conditional
    with one uniform from rng, reassign, increment.  n_d never changes net
    per token and no factor reads it, so it is left untouched."""
    for k in range(order.shape[0]):
        i = order[k]
        d = tok_doc[i]
        w = tok_word[i]
        m = doc_domain[d]
        ts = t_spec[m]

        l0 = l_arr[i]
        r0 = r_arr[i]
        z0 = z_arr[i]
        if r0 == 0:
            n_w_common[l0, z0, w] -= 1
            n_common[l0, z0] -= 1
            n_zc[d, l0, z0] -= 1
        else:
            n_w_spec[m, l0, z0, w] -= 1
            n_spec[m, l0, z0] -= 1
            n_zs[d, l0, z0] -= 1
        n_rl[d, l0, r0] -= 1
        n_l[d, l0] -= 1

        fl = fixed_label[i]
        if fl >= 0:
            lo_l = fl
            hi_l = fl + 1
        else:
            lo_l = 0
            hi_l = n_groups

        n_cells, total = token_probs(
            d, w, m, lo_l, hi_l,
            n_w_common, n_common, n_w_spec, n_spec,
            n_zc, n_zs, n_rl, n_l,
            alpha, beta, gamma, eta,
            t_common, ts, vocab_size, ccl, probs)

        u = rng.random() * total
        cell = n_cells - 1
        acc = 0.0
        for j in range(n_cells):
            acc += probs[j]
            if u < acc:
                cell = j
                break

        block = t_common + ts
        l1 = lo_l + cell // block
        within = cell % block
        if within < t_common:
            r1 = 0
            z1 = within
        else:
            r1 = 1
            z1 = within - t_common

        if r1 == 0:
            n_w_common[l1, z1, w] += 1
            n_common[l1, z1] += 1
            n_zc[d, l1, z1] += 1
        else:
            n_w_spec[m, l1, z1, w] += 1
            n_spec[m, l1, z1] += 1
            n_zs[d, l1, z1] += 1
        n_rl[d, l1, r1] += 1
        n_l[d, l1] += 1
        l_arr[i] = l1
        r_arr[i] = r1
        z_arr[i] = z1
