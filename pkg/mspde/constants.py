# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00
# 文件描述：常量定义
# 文件路径：mspde/constants.py

# 默认终止时间
DEFAULT_T = 0.5

# 默认 Q 特征值衰减 λ^Q_k = k^{-β}
DEFAULT_Q_DECAY = 4.0
# β > 3 才能保证 Σ λ^Q_k ‖g_k‖²_{W^{1,∞}} < ∞
MIN_Q_DECAY = 3.0

# 默认噪声强度 σ
DEFAULT_SIGMA = 0.5

# 正弦谱基求积点下限，实际 P = max(4·q·N, 1024)
MIN_SPECTRAL_QUADRATURE = 1024
SPECTRAL_QUADRATURE_FACTOR = 4

# 有限元每个单元的中点求积点数，P = 8·n_cells
FEM_QUADRATURE_PER_CELL = 8

# Newton 迭代默认参数
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_DAMPING = 1.0
# 谱方法 Jacobian 稠密求解的模数上限，超过后使用预条件 CG
DENSE_JACOBIAN_LIMIT = 256

# 假设检查的网格 [-R, R]，点数
CHECK_GRID_RADIUS = 10.0
CHECK_GRID_POINTS = 100001
CHECK_TOLERANCE = 1e-9

# 蒙特卡洛默认样本数
DEFAULT_SAMPLES = {
    "temporal": 200,
    "spatial": 100,
    "truncation": 100,
}

# 失败样本比例超过该值时中止研究
MAX_FAILURE_FRACTION = 0.01

# 参考解相对被测分辨率的最小加密倍数
MIN_REFINEMENT = 4

# 各研究方向（与格式）的理论收敛阶（γ = 1）
EXPECTED_SLOPES = {
    ("temporal", "euler"): 0.5,
    ("temporal", "milstein"): 1.0,
    ("spatial", "euler"): 2.0,
    ("spatial", "milstein"): 2.0,
    ("truncation", "euler"): 1.5,
    ("truncation", "milstein"): 1.5,
}

# 格式名称映射 (格式, 基函数) -> 名称
SCHEME_LABELS = {
    ("euler", "fem"): "DIEG",
    ("euler", "spectral"): "DIESG",
    ("milstein", "fem"): "DIEMG",
    ("milstein", "spectral"): "DIEMSG",
}

# 假设检查状态映射
CHECK_STATUS_MAP = {
    "pass": "✅ 通过",
    "fail": "❌ 未通过",
    "declared": "📝 由模型声明",
    "trivial": "☑️ 平凡成立",
    "undeclared": "⚠️ 未声明",
}

# 噪声树二进制文件魔数
NOISE_DUMP_MAGIC = b"MSPDENT1"
