"""amol コマンドラインインターフェース"""
