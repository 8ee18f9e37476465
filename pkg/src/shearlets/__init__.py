"""3次元デジタルシアレットフレームとグラム行列の診断"""
