# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：研究进度通知管理器
# 文件路径：mspde/callbacks.py

from typing import Any, Callable, Dict, List, Optional

from .strategies import NotificationMode


class NotificationManager:
    """
    通知管理器

    研究过程中的事件（样本完成、样本失败、研究结束）以字典形式推送给回调函数：
    {"message": str, "is_success": bool, "data": dict}
    """

    def __init__(
        self,
        callbacks: Optional[List[Callable]] = None,
        mode: NotificationMode = NotificationMode.NONE,
        verbose: bool = True,
    ):
        """
        初始化通知管理器

        :param callbacks: 回调函数列表
        :param mode: 通知模式（SUCCESS/ERROR/ALL/NONE）
        :param verbose: 是否显示详细日志
        """
        self.callbacks = callbacks or []
        self.mode = mode
        self.verbose = verbose

    def notify(self, message: str, is_success: bool = True, data: Optional[Dict[str, Any]] = None):
        """
        发送通知

        :param message: 消息内容
        :param is_success: 是否为成功消息
        :param data: 附加数据
        """
        if self.mode == NotificationMode.NONE:
            return
        if self.mode == NotificationMode.SUCCESS and not is_success:
            return
        if self.mode == NotificationMode.ERROR and is_success:
            return

        for index, callback in enumerate(self.callbacks):
            self._call_callback(callback, index, message, is_success, data)

    def _call_callback(
        self,
        callback: Callable,
        index: int,
        message: str,
        is_success: bool,
        data: Optional[Dict[str, Any]]
    ):
        """调用回调函数，异常只打印不抛出"""
        try:
            callback({
                'message': message,
                'is_success': is_success,
                'data': data or {},
            })
        except Exception as e:
            if self.verbose:
                callback_name = getattr(callback, '__name__', f'回调函数{index + 1}')
                print(f"⚠️  回调函数 {callback_name} 执行失败: {str(e)}")
