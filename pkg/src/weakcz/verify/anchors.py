"""Formula fragments that identify each verified inequality.

Every ledger entry carries one of these strings so a reader can locate the
displayed inequality it replays.  The test suite compares this table with a
checked-in copy.
"""

ANCHORS = {
    # geometric Hormander sum
    "lemma1": r"\leq A_1\sum_{i=1}^{l}\left|\Omega_{i}\right|",
    "lemma1_ratio": r"|x-y_{i_*}|\leq 2r_i+|x-y_i^*|",
    # good/bad argument
    "G_measure": r"|G|\leq \sum_{i=1}^m |G_i| \leq m\|M\|t^{-\frac{1}{m}}",
    "g_linf": r"\|g_i\|_{L^{\infty}(\mathbb{R}^n)}\leq t^{\frac{1}{m}}",
    "Es_sum": r"\left|\left\{\left|T(f_1,\ldots,f_m)\right|>t\right\}\right|\leq \sum_{s=1}^{2^m}|E_s|",
    "E1_chebyshev": r"\left|E_1\right|&\leq 4t^{-\frac{2}{m}}\int_{\mathbb{R}^n}|T(g_1,\ldots,g_m)(x)|^{\frac{2}{m}}dx",
    "E1_L2": r"&\leq 4\|T\|^{\frac{2}{m}}_{(L^2(\mathbb{R}^n))^m\rightarrow L^{\frac{2}{m}}(\mathbb{R}^n)}t^{-\frac{2}{m}}\prod_{i=1}^m\left(\int_{\mathbb{R}^n}|g_i(x)|^2dx\right)^{\frac{1}{m}}",
    "E1_L1": r"&\leq 4\|T\|^{\frac{2}{m}}_{(L^2(\mathbb{R}^n))^m\rightarrow L^1(\mathbb{R}^n)}t^{-\frac{1}{m}}\prod_{i=1}^m\|g_i\|_{L^1(\mathbb{R}^n)}^{\frac{1}{m}}",
    "E1_f": r"&\leq 4\|T\|^{\frac{2}{m}}_{(L^2(\mathbb{R}^n))^m\rightarrow L^1(\mathbb{R}^n)}t^{-\frac{1}{m}}\prod_{i=1}^m\|f_{i}\|_{L^1(\mathbb{R}^n)}^{\frac{1}{m}}",
    "whitney": r"2\text{diam}(Q_{i,j})\leq d(Q_{i,j},\mathbb{R}^n\setminus G_i) \leq 8\text{diam}(Q_{i,j})",
    "Es_telescope": r"\left|\widetilde{E}_s\right|&\leq\sum_{k=1}^{l}",
    "Es_split": r"&\leq m^2\|M\|t^{-\frac{1}{m}}+\sum_{k=1}^l|S_k|+|S|",
    "cancellation_cubes": r"(b_{k,j_k}^Ndm-v_{k,j_k}^N)(Q_{k,j_k})=0",
    "Sk_chebyshev": r"|S_k|&\leq (l+1)2^mt^{-1}\int_{\mathbb{R}^n\setminus G}",
    "Sk_pieces": r"&\leq (m+1)2^mt^{-1}\sum_{j_1,\ldots,j_l=1}^N\left(\prod_{i=1}^{k-1}|a_{i,j_i}|\right)",
    "mass_bound": r"\|b_{i,j}\|_{L^1(\mathbb{R}^n)}\leq (17\sqrt{n})^n t^{\frac{1}{m}}|Q_{i,j}|",
    "Sk_cubes": r"&\leq (m+1)2^{m+1}(17\sqrt{n})^{nl}\sum_{j_1,\ldots,j_l=1}^N\left(\prod_{i=1}^l|Q_{i,j_i}|\right)",
    "S_weak": r"|S|&\leq 2(l+1)^{\frac{1}{m}}A_3t^{-\frac{1}{m}}",
    "S_masses": r"&\leq 2(m+1)^{\frac{1}{m}}A_3t^{-\frac{1}{m}}\left(\prod_{i=1}^l\left\|b_i^N\right\|_{L^1(\mathbb{R}^n)}^{\frac{1}{m}}\right)",
    "S_f": r"&\leq 2(m+1)^{\frac{1}{m}}A_3t^{-\frac{1}{m}}\left(\prod_{i=1}^m\|f_i\|_{L^1(\mathbb{R}^n)}^{\frac{1}{m}}\right)",
    "A2_final": r"|\{|T(f_1,\ldots,f_m)|>t\}| \leq |E_1|+\sum_{s=2}^{2^m}|E_s|",
    # ball-system argument
    "Eij_measure": r"|E_{i,j}|=a_{i,j}t^{-\frac{1}{m}}",
    "Ei_measure": r"|E_i|=\sum_{j=1}^N|E_{i,j}|=\sum_{j=1}^Na_{i,j}t^{-\frac{1}{m}}=\|\nu_i\|t^{-\frac{1}{m}}",
    "E_star": r"|E^*|\leq \sum_{i=1}^l|E^*_{i}|\leq 2^n\sum_{i=1}^l|E_{i}|\leq m2^{n}t^{-\frac{1}{m}}",
    "sigma_telescope": r"\leq\sum_{k=1}^{l}\left|\left\{|\sigma_{k-1}-\sigma_{k}|>\frac{t}{l+1}\right\}\right|+\left|\left\{\left|\sigma_l\right|>\frac{t}{l+1}\right\}\right|",
    "T2_split": r"&\leq m^22^nt^{-\frac{1}{m}}+\sum_{k=1}^{l}|P_k|+|P|",
    "cancellation_balls": r"(\nu_{k,j_k}-t^{\frac{1}{m}}\mathbbm{1}_{E_{k,j_k}}dm)(E_k)=0",
    "P_chebyshev": r"|P|&\leq \frac{(l+1)^{\frac{2}{m}}}{t^{\frac{2}{m}-\frac{2l}{m^2}}}\int_{\mathbb{R}^n}",
    "P_bound": r"&\leq (m+1)^{\frac{2}{m}}\|T\|^{\frac{2}{m}}_{(L^2(\mathbb{R}^n))^m\rightarrow L^{\frac{2}{m}}(\mathbb{R}^n)}t^{-\frac{1}{m}}",
    "Pk_chebyshev": r"&|P_k|\leq \frac{l+1}{t^{\frac{m-k+1}{m}}}\int_{\mathbb{R}^n\setminus E^*}",
    "Pk_variation": r"|\nu_{k,j_k}-t^{\frac{1}{m}}\mathbbm{1}_{E_{k,j_k}}dm|(E_k)\leq 2t^{\frac{1}{m}}|E_{k,j_k}|",
    "Pk_lemma": r"&|P_k| \leq 2(m+1)\sum_{j_1,\ldots,j_l=1}^N\left(\prod_{i=1}^{l}|E_{i,j_i}|\right)",
    "A3_final": r"|\{|T(\nu_1,\ldots,\nu_l&,f_1,\ldots,f_{m-l})|>t\}|\leq m^22^nt^{-\frac{1}{m}}+\sum_{k=1}^{l}|P_k|+|P|",
}
